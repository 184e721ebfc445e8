/** Client-side mirror of the experiment config invariants.
 *
 * The server remains authoritative; this only gates the submit button so an
 * operator cannot send a config the service is guaranteed to reject.
 */

export const MAX_END_PRESSURE = 10;

export interface FormValues {
  experiment_id: string;
  concentration: number;
  plate_count: number;
  end_pressure: number;
  cloth_cycles: number;
}

export type FieldName = keyof FormValues;

export interface Violation {
  field: FieldName;
  rule: string;
}

export function validateForm(values: FormValues): Violation[] {
  const violations: Violation[] = [];
  if (values.experiment_id.trim() === "") {
    violations.push({ field: "experiment_id", rule: "experiment_id must not be empty" });
  }
  if (!Number.isFinite(values.concentration) || values.concentration <= 0) {
    violations.push({ field: "concentration", rule: "concentration > 0" });
  }
  if (!Number.isInteger(values.plate_count) || values.plate_count < 1) {
    violations.push({ field: "plate_count", rule: "plate_count >= 1" });
  }
  if (!Number.isFinite(values.end_pressure) || values.end_pressure <= 0) {
    violations.push({ field: "end_pressure", rule: "end_pressure > 0" });
  } else if (values.end_pressure > MAX_END_PRESSURE) {
    violations.push({ field: "end_pressure", rule: `end_pressure <= ${MAX_END_PRESSURE}` });
  }
  if (!Number.isInteger(values.cloth_cycles) || values.cloth_cycles < 1) {
    violations.push({ field: "cloth_cycles", rule: "cloth_cycles >= 1" });
  }
  return violations;
}

export function isValid(values: FormValues): boolean {
  return validateForm(values).length === 0;
}
