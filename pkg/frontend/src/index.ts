export { ApiClient, ApiError } from "./api.js";
export { canonicalJson } from "./canonical.js";
export { VisitController } from "./controller.js";
export { renderScreen } from "./render.js";
export {
  deriveScreenModel,
  enabledClarificationInputs,
} from "./screen.js";
export type {
  ClarificationInput,
  FlagRow,
  SaveGate,
  ScreenModel,
  SectionRow,
} from "./screen.js";
export { runScriptedWalkthrough } from "./walkthrough.js";
export type { WalkthroughResult, WalkthroughScript } from "./walkthrough.js";
export * from "./types.js";
