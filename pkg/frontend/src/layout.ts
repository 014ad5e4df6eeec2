// Force-directed 2D layout for molecular graphs with ring regularization.
// Cosmetic, not a canonical depiction: ring members are nudged toward a
// regular polygon each iteration so rings come out round instead of tangled.
// Deterministic: positions are seeded from a small LCG, not Math.random.

import type { ParsedMolecule } from "./api.js";

export interface Point {
  x: number;
  y: number;
}

const BOND_LENGTH = 60;
const ITERATIONS = 300;

function seededRandom(seed: number): () => number {
  let state = seed >>> 0 || 1;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 4294967296;
  };
}

/** Minimal cycles of the ring-flagged subgraph (one per ring bond family). */
export function detectRings(mol: ParsedMolecule): number[][] {
  const n = mol.atoms.length;
  const ringAdj: number[][] = Array.from({ length: n }, () => []);
  for (const bond of mol.bonds) {
    if (!bond.in_ring) continue;
    ringAdj[bond.a]!.push(bond.b);
    ringAdj[bond.b]!.push(bond.a);
  }
  const rings: number[][] = [];
  const seen = new Set<string>();
  for (const bond of mol.bonds) {
    if (!bond.in_ring) continue;
    // Shortest path from a to b avoiding the direct edge closes the ring.
    const previous = new Map<number, number>();
    const queue = [bond.a];
    previous.set(bond.a, -1);
    let found = false;
    while (queue.length && !found) {
      const node = queue.shift()!;
      for (const next of ringAdj[node]!) {
        if (node === bond.a && next === bond.b) continue;
        if (previous.has(next)) continue;
        previous.set(next, node);
        if (next === bond.b) {
          found = true;
          break;
        }
        queue.push(next);
      }
    }
    if (!found) continue;
    const cycle: number[] = [];
    let walk = bond.b;
    while (walk !== -1) {
      cycle.push(walk);
      walk = previous.get(walk)!;
    }
    const key = [...cycle].sort((x, y) => x - y).join("-");
    if (!seen.has(key)) {
      seen.add(key);
      rings.push(cycle);
    }
  }
  return rings;
}

export function layoutMolecule(mol: ParsedMolecule, seed = 7): Point[] {
  const n = mol.atoms.length;
  const rand = seededRandom(seed + n * 131);
  const positions: Point[] = Array.from({ length: n }, (_, i) => ({
    x: Math.cos((2 * Math.PI * i) / n) * BOND_LENGTH + (rand() - 0.5) * 10,
    y: Math.sin((2 * Math.PI * i) / n) * BOND_LENGTH + (rand() - 0.5) * 10,
  }));
  if (n === 1) {
    return [{ x: 0, y: 0 }];
  }
  const rings = detectRings(mol);

  for (let iteration = 0; iteration < ITERATIONS; iteration++) {
    const cooling = 1 - iteration / ITERATIONS;
    const forces: Point[] = Array.from({ length: n }, () => ({ x: 0, y: 0 }));

    // pairwise repulsion
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const dx = positions[i]!.x - positions[j]!.x;
        const dy = positions[i]!.y - positions[j]!.y;
        const dist2 = Math.max(dx * dx + dy * dy, 1);
        const push = (BOND_LENGTH * BOND_LENGTH) / dist2;
        const dist = Math.sqrt(dist2);
        forces[i]!.x += (dx / dist) * push;
        forces[i]!.y += (dy / dist) * push;
        forces[j]!.x -= (dx / dist) * push;
        forces[j]!.y -= (dy / dist) * push;
      }
    }
    // bond springs
    for (const bond of mol.bonds) {
      const dx = positions[bond.b]!.x - positions[bond.a]!.x;
      const dy = positions[bond.b]!.y - positions[bond.a]!.y;
      const dist = Math.max(Math.sqrt(dx * dx + dy * dy), 1e-6);
      const pull = 0.15 * (dist - BOND_LENGTH);
      forces[bond.a]!.x += (dx / dist) * pull;
      forces[bond.a]!.y += (dy / dist) * pull;
      forces[bond.b]!.x -= (dx / dist) * pull;
      forces[bond.b]!.y -= (dy / dist) * pull;
    }
    const step = 4 * cooling;
    for (let i = 0; i < n; i++) {
      const fx = forces[i]!.x;
      const fy = forces[i]!.y;
      const magnitude = Math.max(Math.sqrt(fx * fx + fy * fy), 1e-9);
      const clamp = Math.min(magnitude, step);
      positions[i]!.x += (fx / magnitude) * clamp;
      positions[i]!.y += (fy / magnitude) * clamp;
    }

    // ring regularization: blend members toward a regular polygon laid out
    // in their current angular order around the ring centroid
    for (const ring of rings) {
      const k = ring.length;
      const cx = ring.reduce((s, i) => s + positions[i]!.x, 0) / k;
      const cy = ring.reduce((s, i) => s + positions[i]!.y, 0) / k;
      const radius = BOND_LENGTH / (2 * Math.sin(Math.PI / k));
      const ordered = [...ring].sort(
        (p, q) =>
          Math.atan2(positions[p]!.y - cy, positions[p]!.x - cx) -
          Math.atan2(positions[q]!.y - cy, positions[q]!.x - cx),
      );
      const phase = Math.atan2(
        positions[ordered[0]!]!.y - cy,
        positions[ordered[0]!]!.x - cx,
      );
      ordered.forEach((atom, slot) => {
        const angle = phase + (2 * Math.PI * slot) / k;
        const tx = cx + radius * Math.cos(angle);
        const ty = cy + radius * Math.sin(angle);
        const blend = 0.25;
        positions[atom]!.x += (tx - positions[atom]!.x) * blend;
        positions[atom]!.y += (ty - positions[atom]!.y) * blend;
      });
    }
  }

  // center on the bounding box
  const xs = positions.map((p) => p.x);
  const ys = positions.map((p) => p.y);
  const midX = (Math.min(...xs) + Math.max(...xs)) / 2;
  const midY = (Math.min(...ys) + Math.max(...ys)) / 2;
  return positions.map((p) => ({ x: p.x - midX, y: p.y - midY }));
}
