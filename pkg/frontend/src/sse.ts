/**
 * Incremental server-sent-events parsing over fetch streams.
 *
 * The assessment endpoint is a POST, so EventSource does not apply; the
 * response body is read chunk by chunk and fed through this parser.
 */

export interface SSEEvent {
  event: string;
  data: string;
}

export class SSEParser {
  private buffer = "";

  /** Feed raw text; returns every complete event terminated so far. */
  feed(text: string): SSEEvent[] {
    this.buffer += text;
    const events: SSEEvent[] = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary >= 0) {
      const block = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const parsed = parseBlock(block);
      if (parsed) {
        events.push(parsed);
      }
      boundary = this.buffer.indexOf("\n\n");
    }
    return events;
  }

  /** Parse whatever remains after the stream closed. */
  flush(): SSEEvent[] {
    const rest = this.buffer;
    this.buffer = "";
    const parsed = parseBlock(rest);
    return parsed ? [parsed] : [];
  }
}

function parseBlock(block: string): SSEEvent | null {
  if (!block.trim()) {
    return null;
  }
  let event = "message";
  const dataLines: string[] = [];
  for (const line of block.split("\n")) {
    if (line.startsWith("event:")) {
      event = line.slice("event:".length).trim();
    } else if (line.startsWith("data:")) {
      let value = line.slice("data:".length);
      if (value.startsWith(" ")) {
        value = value.slice(1);
      }
      dataLines.push(value);
    }
  }
  return { event, data: dataLines.join("\n") };
}

/** Read a streaming response to completion, invoking onEvent per SSE event. */
export async function readSSEStream(
  response: Response,
  onEvent: (event: SSEEvent) => void,
): Promise<void> {
  if (!response.body) {
    throw new Error("response has no body to stream");
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const parser = new SSEParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) {
      break;
    }
    for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
      onEvent(event);
    }
  }
  for (const event of parser.feed(decoder.decode())) {
    onEvent(event);
  }
  for (const event of parser.flush()) {
    onEvent(event);
  }
}
