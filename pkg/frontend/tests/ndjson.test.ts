import { describe, expect, it } from "vitest";
import { ndjsonObjects } from "../src/ndjson";

function streamOf(chunks: (string | Uint8Array)[]): ReadableStream<Uint8Array> {
  const enc = new TextEncoder();
  return new ReadableStream({
    start(controller) {
      for (const chunk of chunks) {
        controller.enqueue(typeof chunk === "string" ? enc.encode(chunk) : chunk);
      }
      controller.close();
    },
  });
}

async function collect<T>(stream: ReadableStream<Uint8Array>): Promise<T[]> {
  const out: T[] = [];
  for await (const obj of ndjsonObjects<T>(stream)) out.push(obj);
  return out;
}

describe("ndjsonObjects", () => {
  it("yields one object per line", async () => {
    const got = await collect(streamOf(['{"a":1}\n{"a":2}\n{"a":3}\n']));
    expect(got).toEqual([{ a: 1 }, { a: 2 }, { a: 3 }]);
  });

  it("reassembles lines split across chunks", async () => {
    const got = await collect(streamOf(['{"t":1,"x"', ':10}\n{"t":2', ',"x":20}\n']));
    expect(got).toEqual([{ t: 1, x: 10 }, { t: 2, x: 20 }]);
  });

  it("handles a multi-byte character split mid-sequence", async () => {
    const bytes = new TextEncoder().encode('{"name":"véhicule"}\n');
    const cut = 10; // inside the two-byte é
    const got = await collect(streamOf([bytes.slice(0, cut), bytes.slice(cut)]));
    expect(got).toEqual([{ name: "véhicule" }]);
  });

  it("flushes a trailing object with no final newline", async () => {
    const got = await collect(streamOf(['{"a":1}\n{"a":2}']));
    expect(got).toEqual([{ a: 1 }, { a: 2 }]);
  });

  it("skips blank lines", async () => {
    const got = await collect(streamOf(['\n{"a":1}\n\n  \n{"a":2}\n']));
    expect(got).toEqual([{ a: 1 }, { a: 2 }]);
  });

  it("surfaces malformed JSON as an error", async () => {
    await expect(collect(streamOf(['{"a":1}\n{nope}\n']))).rejects.toThrow();
  });
});
