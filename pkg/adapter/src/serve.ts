/**
 * Line-protocol server: one JSON request per line on stdin, one JSON
 * response per line on stdout, in order. A malformed request line gets an
 * error response and the process keeps serving.
 */

import { createInterface } from "node:readline";

import { scoreText } from "./adapter.js";
import { LanguageModel } from "./models.js";

interface Request {
  id: unknown;
  text: unknown;
}

export function serve(model: LanguageModel, eosIncluded: boolean): Promise<void> {
  const rl = createInterface({ input: process.stdin, terminal: false });
  return new Promise((resolve) => {
    rl.on("line", (line) => {
      const trimmed = line.trim();
      if (trimmed.length === 0) return;
      let request: Request;
      try {
        request = JSON.parse(trimmed);
        if (typeof request !== "object" || request === null || !("id" in request) || !("text" in request)) {
          throw new Error("request needs id and text fields");
        }
        if (typeof request.text !== "string") {
          throw new Error("text must be a string");
        }
      } catch (err) {
        process.stdout.write(
          JSON.stringify({ id: null, error: `malformed request line: ${String(err)}` }) + "\n"
        );
        return;
      }
      try {
        const { tokens, surprisalBits } = scoreText(model, request.text, eosIncluded);
        process.stdout.write(
          JSON.stringify({ id: request.id, tokens, surprisal_bits: surprisalBits }) + "\n"
        );
      } catch (err) {
        process.stdout.write(
          JSON.stringify({ id: request.id, error: String(err) }) + "\n"
        );
      }
    });
    rl.on("close", () => resolve());
  });
}
