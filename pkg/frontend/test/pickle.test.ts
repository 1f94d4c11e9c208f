import { describe, expect, it } from "vitest";
import { DataError } from "../src/errors.js";
import { latin1, loads, Tuple } from "../src/pickle.js";
import { readFixture } from "./util.js";

describe("protocol 0 stream", () => {
  const value = loads(readFixture("unit", "proto0.pkl"));
  const m = value as Map<string, unknown>;

  it("rebuilds the dict with string keys", () => {
    expect(value).toBeInstanceOf(Map);
    expect([...m.keys()].sort()).toEqual(["a", "a2", "b", "big", "s", "t"]);
  });

  it("decodes ints, floats and tuples", () => {
    expect(m.get("a")).toEqual([1, 2, 3]);
    expect(m.get("b")).toBe(2.5);
    const t = m.get("t") as Tuple;
    expect(t).toBeInstanceOf(Tuple);
    expect(t.items).toEqual([1, 2]);
  });

  it("keeps py2 str values as bytes", () => {
    const s = m.get("s") as Uint8Array;
    expect(s).toBeInstanceOf(Uint8Array);
    expect(latin1(s)).toBe("hey");
  });

  it("decodes arbitrary-precision longs", () => {
    expect(m.get("big")).toBe(123456789012345678901234567890n);
  });

  it("resolves memo references to the same object", () => {
    expect(m.get("a2")).toBe(m.get("a"));
  });
});

describe("protocol 2 stream", () => {
  it("round-trips nested containers", () => {
    const m = loads(readFixture("unit", "proto2_misc.pkl")) as Map<string, unknown>;
    const nested = m.get("nested") as Map<string, unknown>;
    expect(nested.get("k")).toEqual([true, false, null, 1.5, "txt"]);
    const tup = m.get("tup") as Tuple;
    expect(tup.items[0]).toBe(1);
    expect((tup.items[1] as Tuple).items).toEqual([2, 3]);
  });
});

describe("malformed input", () => {
  it("reports truncation", () => {
    const whole = readFixture("unit", "proto2_misc.pkl");
    const cut = whole.subarray(0, whole.length - 4);
    expect(() => loads(cut)).toThrow(DataError);
    expect(() => loads(cut)).toThrow(/truncated/);
  });

  it("names an unknown opcode and its offset", () => {
    expect(() => loads(Uint8Array.from([0x80, 0x02, 0xff]))).toThrow(
      /unsupported pickle opcode 0xff at offset 2/,
    );
  });
});
