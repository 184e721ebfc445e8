/** Service base URL: `?service=` query parameter, else same-origin default. */

export function serviceBaseUrl(search = globalThis.location?.search ?? ""): string {
  const params = new URLSearchParams(search);
  const fromQuery = params.get("service");
  if (fromQuery) return fromQuery.replace(/\/$/, "");
  return "";
}
