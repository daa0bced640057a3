/**
 * Display formatting: server values pass through verbatim.
 *
 * The parity rule for the studio is that every displayed quantity equals
 * the service's value — these helpers stringify without rounding or
 * recomputation, so a displayed number can be compared byte-for-byte with
 * the JSON the service sent.
 */

export function displayNumber(value: number): string {
  return String(value);
}

export function displayInt(value: number): string {
  return String(value);
}

export function displayBool(value: boolean): string {
  return value ? "yes" : "no";
}

/** fixed-width label for sliders; display-only, never fed back to the model */
export function sliderLabel(value: number, digits = 3): string {
  return value.toFixed(digits);
}

export function displaySlacks(slacks: number[]): string[] {
  return slacks.map(displayNumber);
}
