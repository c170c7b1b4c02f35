// Number rendering that matches the backend's canonical float encoding
// (printf "%.17g" with a two-digit exponent and -0 normalized to 0), so a
// value shown in the UI is character-identical to the CLI's CSV cell.

/** Format a finite number with up to 17 significant digits, %g style. */
export function formatG17(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`non-finite value is not displayable: ${x}`);
  }
  if (x === 0) {
    return "0"; // covers -0 as well
  }
  const negative = x < 0;
  const abs = Math.abs(x);
  // 17 correctly rounded significant digits plus the decimal exponent
  const sci = abs.toExponential(16);
  const eIndex = sci.indexOf("e");
  let digits = sci.slice(0, eIndex).replace(".", "");
  let exponent = parseInt(sci.slice(eIndex + 1), 10);

  let body: string;
  if (exponent < -4 || exponent >= 17) {
    digits = trimTrailingZeros(digits);
    const mantissa = digits.length === 1 ? digits : `${digits[0]}.${digits.slice(1)}`;
    const sign = exponent < 0 ? "-" : "+";
    const magnitude = Math.abs(exponent).toString().padStart(2, "0");
    body = `${mantissa}e${sign}${magnitude}`;
  } else if (exponent >= 0) {
    const intPart = digits.slice(0, exponent + 1);
    const fracPart = trimTrailingZeros(digits.slice(exponent + 1));
    body = fracPart.length ? `${intPart}.${fracPart}` : intPart;
  } else {
    const fracPart = trimTrailingZeros("0".repeat(-exponent - 1) + digits);
    body = `0.${fracPart}`;
  }
  return negative ? `-${body}` : body;
}

function trimTrailingZeros(digits: string): string {
  let end = digits.length;
  while (end > 0 && digits[end - 1] === "0") {
    end -= 1;
  }
  return digits.slice(0, end);
}

/** Compact display for axis-style labels: trims to a few digits. */
export function formatShort(x: number, digits = 4): string {
  if (!Number.isFinite(x)) return String(x);
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 1e5 || abs < 1e-3) return x.toExponential(Math.max(digits - 1, 0));
  return x.toPrecision(digits).replace(/\.?0+$/, "");
}
