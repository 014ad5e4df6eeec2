// SVG depiction of a parsed molecule: element labels, parallel lines for
// double/triple bonds, dashed lines for aromatic bonds.

import type { ParsedMolecule } from "./api.js";
import { layoutMolecule, type Point } from "./layout.js";

const PADDING = 36;

const ELEMENT_COLORS: Record<string, string> = {
  C: "#26323d",
  N: "#2456c4",
  O: "#c43624",
  S: "#b58900",
  P: "#c46b24",
  F: "#2ba12b",
  Cl: "#2ba12b",
  Br: "#8c4722",
  I: "#7b2ba1",
};

function svgLine(
  a: Point,
  b: Point,
  cls: string,
  aromatic: boolean,
  offset = 0,
): string {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const length = Math.max(Math.hypot(dx, dy), 1e-6);
  const ox = (-dy / length) * offset;
  const oy = (dx / length) * offset;
  const dash = aromatic ? ' stroke-dasharray="5 4"' : "";
  return (
    `<line class="${cls}" data-aromatic="${aromatic}" ` +
    `x1="${(a.x + ox).toFixed(1)}" y1="${(a.y + oy).toFixed(1)}" ` +
    `x2="${(b.x + ox).toFixed(1)}" y2="${(b.y + oy).toFixed(1)}"${dash}/>`
  );
}

export function moleculeSvg(mol: ParsedMolecule, seed = 7): string {
  const positions = layoutMolecule(mol, seed);
  const xs = positions.map((p) => p.x);
  const ys = positions.map((p) => p.y);
  const minX = Math.min(...xs) - PADDING;
  const minY = Math.min(...ys) - PADDING;
  const width = Math.max(...xs) - Math.min(...xs) + 2 * PADDING;
  const height = Math.max(...ys) - Math.min(...ys) + 2 * PADDING;

  const parts: string[] = [];
  mol.bonds.forEach((bond, index) => {
    const a = positions[bond.a]!;
    const b = positions[bond.b]!;
    const cls = `bond bond-${index}`;
    if (bond.aromatic) {
      parts.push(svgLine(a, b, `${cls} aromatic`, true));
    } else if (bond.order === 2) {
      parts.push(svgLine(a, b, cls, false, 2.6));
      parts.push(svgLine(a, b, cls, false, -2.6));
    } else if (bond.order === 3) {
      parts.push(svgLine(a, b, cls, false, 0));
      parts.push(svgLine(a, b, cls, false, 4.5));
      parts.push(svgLine(a, b, cls, false, -4.5));
    } else {
      parts.push(svgLine(a, b, cls, false));
    }
  });
  mol.atoms.forEach((atom, index) => {
    const p = positions[index]!;
    const color = ELEMENT_COLORS[atom.element] ?? "#4a4a4a";
    const charge = atom.charge > 0 ? "+".repeat(Math.min(atom.charge, 3))
      : atom.charge < 0 ? "-".repeat(Math.min(-atom.charge, 3)) : "";
    const label = atom.element + charge;
    parts.push(
      `<g class="atom" data-element="${atom.element}">` +
        `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="11" fill="#ffffff"/>` +
        `<text x="${p.x.toFixed(1)}" y="${p.y.toFixed(1)}" fill="${color}" ` +
        `text-anchor="middle" dominant-baseline="central">${label}</text></g>`,
    );
  });

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" class="molecule" ` +
    `viewBox="${minX.toFixed(1)} ${minY.toFixed(1)} ${width.toFixed(1)} ${height.toFixed(1)}">` +
    parts.join("") +
    `</svg>`
  );
}
