/** Wire types, mirroring the scoring service's JSON contract. */

export type Gender = "male" | "female";

export interface ScreeningRequest {
  description_text: string;
  age: number;
  gender: Gender;
  speaking_duration: number;
}

export type RiskBand = "Low" | "Elevated" | "High";

export interface ScreeningResponse {
  probability: number;
  risk_band: RiskBand;
  model_version: string;
  disclaimer: string;
}
