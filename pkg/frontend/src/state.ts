// Pure UI state transitions. The staleness rule lives here so it can be
// tested without a DOM: any edit to the input text clears the structure
// panel and the prediction table, and a prediction is only displayable
// while it still belongs to the current input.

import type { ApiError, ParsedMolecule, PredictionRow } from "./api.js";

export interface UIState {
  smiles: string;
  parsed: ParsedMolecule | null;
  parseError: ApiError | null;
  prediction: PredictionRow[] | null;
  predictionFor: string | null;
  prior: string[];
  topK: number;
  busy: boolean;
  banner: string | null;
}

export function initialState(): UIState {
  return {
    smiles: "",
    parsed: null,
    parseError: null,
    prediction: null,
    predictionFor: null,
    prior: [],
    topK: 25,
    busy: false,
    banner: null,
  };
}

export function inputChanged(state: UIState, smiles: string): UIState {
  if (smiles === state.smiles) return state;
  return {
    ...state,
    smiles,
    parsed: null,
    parseError: null,
    prediction: null,
    predictionFor: null,
    banner: null,
  };
}

export function parseSucceeded(state: UIState, parsed: ParsedMolecule): UIState {
  return { ...state, parsed, parseError: null, banner: null };
}

export function parseFailed(state: UIState, error: ApiError): UIState {
  return { ...state, parsed: null, parseError: error, banner: null };
}

export function predictionArrived(
  state: UIState,
  smiles: string,
  rows: PredictionRow[],
): UIState {
  if (smiles !== state.smiles) {
    return state; // stale response: the input moved on
  }
  return { ...state, prediction: rows, predictionFor: smiles, banner: null };
}

export function displayablePrediction(state: UIState): PredictionRow[] | null {
  if (state.prediction === null || state.predictionFor !== state.smiles) {
    return null;
  }
  return state.prediction;
}

export function togglePrior(state: UIState, diseaseId: string): UIState {
  const prior = state.prior.includes(diseaseId)
    ? state.prior.filter((d) => d !== diseaseId)
    : [...state.prior, diseaseId];
  return { ...state, prior };
}
