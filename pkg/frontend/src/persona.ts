// Parses a persona fixture: a JSON-lines file whose first record is a
// header and whose remaining records are seedable memories.

export interface Persona {
  name: string;
  userId: string;
  records: Record<string, unknown>[];
}

interface PersonaHeader {
  record?: string;
  format?: string;
  version?: number;
  name?: string;
  user_id?: string;
}

export function parsePersona(text: string): Persona {
  const lines = text.split("\n").filter((line) => line.trim() !== "");
  if (lines.length === 0) {
    throw new Error("persona file is empty");
  }
  const parsed: unknown[] = [];
  lines.forEach((line, index) => {
    try {
      parsed.push(JSON.parse(line));
    } catch {
      throw new Error(`persona line ${index + 1} is not valid JSON`);
    }
  });
  const header = parsed[0] as PersonaHeader;
  if (header.record !== "header" || header.format !== "persona") {
    throw new Error("persona file must start with a persona header record");
  }
  if (header.version !== 1) {
    throw new Error(`unsupported persona version: ${String(header.version)}`);
  }
  return {
    name: header.name ?? "unnamed",
    userId: header.user_id ?? "wearer-a",
    records: parsed.slice(1) as Record<string, unknown>[],
  };
}
