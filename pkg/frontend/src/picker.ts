/** Correction picker: exactly the lexicon's canonical ids plus No/Unspecified.
 *
 * Nothing free-text, so every human label is normalizable by construction.
 */

export const FIXED_OPTIONS = ["No", "Unspecified"] as const;

export function buildPickerOptions(canonicalIds: readonly string[]): string[] {
  return [...FIXED_OPTIONS, ...canonicalIds];
}

export function filterPickerOptions(options: readonly string[], query: string): string[] {
  const needle = query.trim().toLowerCase();
  if (!needle) return [...options];
  return options.filter((option) => option.toLowerCase().includes(needle));
}
