/**
 * Protocol conformance against a live serve process (the built CLI).
 */

import { spawn, spawnSync, ChildProcessWithoutNullStreams } from "node:child_process";
import { once } from "node:events";
import { createInterface, Interface } from "node:readline";
import { fileURLToPath } from "node:url";
import path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

const CLI = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "dist", "cli.js");

class ServeHandle {
  proc: ChildProcessWithoutNullStreams;
  private reader: Interface;
  private queue: string[] = [];
  private waiters: ((line: string) => void)[] = [];

  constructor(args: string[]) {
    this.proc = spawn("node", [CLI, ...args], { stdio: ["pipe", "pipe", "pipe"] });
    this.reader = createInterface({ input: this.proc.stdout });
    this.reader.on("line", (line) => {
      const waiter = this.waiters.shift();
      if (waiter) waiter(line);
      else this.queue.push(line);
    });
  }

  send(payload: unknown): void {
    this.proc.stdin.write(JSON.stringify(payload) + "\n");
  }

  sendRaw(line: string): void {
    this.proc.stdin.write(line + "\n");
  }

  next(): Promise<Record<string, unknown>> {
    const line = this.queue.shift();
    if (line !== undefined) return Promise.resolve(JSON.parse(line));
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("timed out waiting for response")), 8000);
      this.waiters.push((l) => {
        clearTimeout(timer);
        resolve(JSON.parse(l));
      });
    });
  }

  async close(): Promise<void> {
    this.proc.stdin.end();
    await once(this.proc, "exit");
  }
}

describe("serve protocol", () => {
  let handle: ServeHandle;

  beforeAll(() => {
    handle = new ServeHandle(["serve", "--model", "uniform:16", "--eos-included", "false"]);
  });

  afterAll(async () => {
    await handle.close();
  });

  it("answers requests in order with aligned lists", async () => {
    handle.send({ id: "s1", text: "alpha beta" });
    handle.send({ id: "s2", text: "gamma" });
    const r1 = await handle.next();
    const r2 = await handle.next();
    expect(r1.id).toBe("s1");
    expect(r1.tokens).toEqual(["alpha", "beta"]);
    expect(r1.surprisal_bits).toEqual([4, 4]);
    expect(r2.id).toBe("s2");
    expect(r2.surprisal_bits).toEqual([4]);
  });

  it("empty text yields empty lists", async () => {
    handle.send({ id: "empty", text: "" });
    const r = await handle.next();
    expect(r.tokens).toEqual([]);
    expect(r.surprisal_bits).toEqual([]);
  });

  it("survives malformed request lines with an error response", async () => {
    handle.sendRaw("this is not json");
    const err = await handle.next();
    expect(err.error).toMatch(/malformed/);
    handle.send({ id: "after", text: "still alive" });
    const ok = await handle.next();
    expect(ok.id).toBe("after");
    expect(ok.tokens).toEqual(["still", "alive"]);
  });
});

describe("startup failures", () => {
  it("model load failure exits nonzero before serving", () => {
    const result = spawnSync("node", [CLI, "serve", "--model", "arpa:/no/such/file.arpa"], {
      input: "",
      encoding: "utf-8",
      timeout: 8000,
    });
    expect(result.status).not.toBe(0);
  });

  it("missing --model is a usage error", () => {
    const result = spawnSync("node", [CLI, "serve"], { input: "", encoding: "utf-8" });
    expect(result.status).toBe(2);
  });
});
