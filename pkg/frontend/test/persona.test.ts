import { describe, expect, it } from "vitest";

import { parsePersona } from "../src/persona.js";

const HEADER = JSON.stringify({
  format: "persona",
  name: "persona_a",
  record: "header",
  user_id: "wearer-a",
  version: 1,
});

const SEED = JSON.stringify({
  record: "seed",
  id: "m-000001",
  user_id: "wearer-a",
  query_text: "The mailbox code is 4427.",
});

describe("parsePersona", () => {
  it("returns header fields and the seed records", () => {
    const persona = parsePersona(`${HEADER}\n${SEED}\n`);
    expect(persona.name).toBe("persona_a");
    expect(persona.userId).toBe("wearer-a");
    expect(persona.records).toHaveLength(1);
    expect(persona.records[0].id).toBe("m-000001");
  });

  it("rejects files whose header is not a persona header", () => {
    const wrong = JSON.stringify({ record: "header", format: "scenario", version: 1 });
    expect(() => parsePersona(`${wrong}\n${SEED}`)).toThrow(/persona header/);
  });

  it("rejects unsupported versions", () => {
    const v2 = JSON.stringify({ record: "header", format: "persona", version: 2 });
    expect(() => parsePersona(v2)).toThrow(/version: 2/);
  });

  it("reports the line number of broken JSON", () => {
    expect(() => parsePersona(`${HEADER}\n{not json`)).toThrow(/line 2/);
  });

  it("rejects empty input", () => {
    expect(() => parsePersona("\n\n")).toThrow(/empty/);
  });
});
