// Incremental reader for newline-delimited JSON over a fetch body stream.
// Chunk boundaries fall anywhere (mid-line, mid-UTF-8 sequence); the decoder
// buffers partials and yields one parsed object per complete line.

export async function* ndjsonObjects<T>(
  stream: ReadableStream<Uint8Array>,
): AsyncGenerator<T, void, undefined> {
  const reader = stream.getReader();
  const decoder = new TextDecoder();
  let buf = "";
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buf += decoder.decode(value, { stream: true });
      let nl: number;
      while ((nl = buf.indexOf("\n")) >= 0) {
        const line = buf.slice(0, nl);
        buf = buf.slice(nl + 1);
        if (line.trim()) yield JSON.parse(line) as T;
      }
    }
    buf += decoder.decode(); // flush a trailing partial code point, if any
    if (buf.trim()) yield JSON.parse(buf) as T;
  } finally {
    reader.releaseLock();
  }
}
