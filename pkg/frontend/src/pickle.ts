/**
 * Minimal pickle virtual machine.
 *
 * Covers the opcode set emitted for the citation dataset distributions
 * (pickle protocols 0 through 2 written from Python 2) plus the handful of
 * protocol 4/5 framing opcodes so modern regenerated files load as well.
 * Container types map onto plain JS values; class instances surface either
 * through the caller's hooks or as generic `Instance` records.
 *
 * Byte strings (Python 2 `str`) stay `Uint8Array`: numeric payloads must
 * not round-trip through text. Dict keys alone are decoded as latin-1 so
 * state dicts can be read with string lookups.
 */

import { DataError } from "./errors.js";

export class Tuple {
  constructor(readonly items: PickleValue[]) {}
}

export class Global {
  constructor(readonly module: string, readonly name: string) {}
  get qualified(): string {
    return `${this.module}.${this.name}`;
  }
}

/** Fallback for REDUCE/NEWOBJ results no hook claimed. */
export class Instance {
  state: PickleValue | undefined;
  constructor(readonly cls: Global, readonly args: PickleValue[]) {}
}

export type PickleValue =
  | null
  | boolean
  | number
  | bigint
  | string
  | Uint8Array
  | PickleValue[]
  | Map<string | number, PickleValue>
  | Tuple
  | Global
  | Instance
  | unknown;

export interface PickleHooks {
  /** Claim a REDUCE/NEWOBJ/INST call; return undefined to decline. */
  instantiate?(cls: Global, args: PickleValue[]): unknown | undefined;
  /** Apply BUILD state to a hook-created object; return true when handled. */
  setState?(obj: unknown, state: PickleValue): boolean;
}

const MARK = Symbol("mark");

function latin1(bytes: Uint8Array): string {
  let s = "";
  for (let i = 0; i < bytes.length; i++) s += String.fromCharCode(bytes[i]);
  return s;
}

/** Undo Python 2 repr escaping inside a STRING opcode payload. */
function unescapeString(body: string): Uint8Array {
  const out: number[] = [];
  for (let i = 0; i < body.length; i++) {
    const ch = body[i];
    if (ch !== "\\") {
      out.push(body.charCodeAt(i));
      continue;
    }
    const esc = body[++i];
    switch (esc) {
      case "\\": out.push(92); break;
      case "'": out.push(39); break;
      case '"': out.push(34); break;
      case "n": out.push(10); break;
      case "r": out.push(13); break;
      case "t": out.push(9); break;
      case "0": out.push(0); break;
      case "x": {
        out.push(parseInt(body.slice(i + 1, i + 3), 16));
        i += 2;
        break;
      }
      default:
        throw new DataError(`unsupported string escape \\${esc} in pickle`);
    }
  }
  return Uint8Array.from(out);
}

function decodeRawUnicode(body: string): string {
  return body.replace(/\\u([0-9a-fA-F]{4})/g, (_, h) =>
    String.fromCharCode(parseInt(h, 16)),
  ).replace(/\\\\/g, "\\");
}

function longFromLeBytes(bytes: Uint8Array): number | bigint {
  if (bytes.length === 0) return 0;
  let value = 0n;
  for (let i = bytes.length - 1; i >= 0; i--) value = (value << 8n) | BigInt(bytes[i]);
  if (bytes[bytes.length - 1] & 0x80) value -= 1n << BigInt(8 * bytes.length);
  const n = Number(value);
  return Number.isSafeInteger(n) ? n : value;
}

class Reader {
  pos = 0;
  constructor(readonly buf: Uint8Array, readonly view: DataView) {}

  u8(): number {
    if (this.pos >= this.buf.length) throw new DataError("truncated pickle stream");
    return this.buf[this.pos++];
  }
  u16(): number {
    const v = this.view.getUint16(this.pos, true);
    this.pos += 2;
    return v;
  }
  u32(): number {
    const v = this.view.getUint32(this.pos, true);
    this.pos += 4;
    return v;
  }
  i32(): number {
    const v = this.view.getInt32(this.pos, true);
    this.pos += 4;
    return v;
  }
  f64be(): number {
    const v = this.view.getFloat64(this.pos, false);
    this.pos += 8;
    return v;
  }
  bytes(n: number): Uint8Array {
    if (this.pos + n > this.buf.length) throw new DataError("truncated pickle stream");
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }
  /** ASCII line without the trailing newline. */
  line(): string {
    const start = this.pos;
    while (this.pos < this.buf.length && this.buf[this.pos] !== 10) this.pos++;
    if (this.pos >= this.buf.length) throw new DataError("truncated pickle stream");
    return latin1(this.buf.subarray(start, this.pos++));
  }
}

export function loads(data: Uint8Array, hooks: PickleHooks = {}): PickleValue {
  const r = new Reader(data, new DataView(data.buffer, data.byteOffset, data.byteLength));
  const stack: (PickleValue | typeof MARK)[] = [];
  const memo = new Map<number, PickleValue>();

  const pop = (): PickleValue => {
    const v = stack.pop();
    if (v === undefined || v === MARK) throw new DataError("pickle stack underflow");
    return v;
  };
  const popMark = (): PickleValue[] => {
    const at = stack.lastIndexOf(MARK);
    if (at < 0) throw new DataError("pickle MARK missing");
    const items = stack.splice(at + 1) as PickleValue[];
    stack.pop();
    return items;
  };
  const dictKey = (k: PickleValue): string | number => {
    if (k instanceof Uint8Array) return latin1(k);
    if (typeof k === "string" || typeof k === "number") return k;
    throw new DataError(`unsupported pickle dict key type ${typeof k}`);
  };
  const instantiate = (cls: Global, args: PickleValue[]): PickleValue => {
    const claimed = hooks.instantiate?.(cls, args);
    if (claimed !== undefined) return claimed;
    if (cls.name === "defaultdict" && cls.module === "collections") return new Map();
    if (cls.name === "OrderedDict" && cls.module === "collections") return new Map();
    return new Instance(cls, args);
  };

  for (;;) {
    const op = r.u8();
    switch (op) {
      case 0x80: // PROTO
        r.u8();
        break;
      case 0x95: // FRAME: length hint only
        r.bytes(8);
        break;
      case 0x2e: // STOP
        return pop();

      case 0x28: // MARK
        stack.push(MARK);
        break;
      case 0x30: // POP
        stack.pop();
        break;
      case 0x31: // POP_MARK
        popMark();
        break;
      case 0x32: // DUP
        stack.push(stack[stack.length - 1]);
        break;

      case 0x4e: // NONE
        stack.push(null);
        break;
      case 0x88: // NEWTRUE
        stack.push(true);
        break;
      case 0x89: // NEWFALSE
        stack.push(false);
        break;

      case 0x49: { // INT (protocol 0; also encodes booleans)
        const text = r.line();
        if (text === "01") stack.push(true);
        else if (text === "00") stack.push(false);
        else stack.push(parseInt(text, 10));
        break;
      }
      case 0x4a: // BININT
        stack.push(r.i32());
        break;
      case 0x4b: // BININT1
        stack.push(r.u8());
        break;
      case 0x4d: // BININT2
        stack.push(r.u16());
        break;
      case 0x4c: { // LONG
        const text = r.line().replace(/L$/, "");
        const big = BigInt(text);
        const n = Number(big);
        stack.push(Number.isSafeInteger(n) ? n : big);
        break;
      }
      case 0x8a: // LONG1
        stack.push(longFromLeBytes(r.bytes(r.u8())));
        break;
      case 0x8b: // LONG4
        stack.push(longFromLeBytes(r.bytes(r.u32())));
        break;

      case 0x46: // FLOAT
        stack.push(parseFloat(r.line()));
        break;
      case 0x47: // BINFLOAT: big-endian by definition
        stack.push(r.f64be());
        break;

      case 0x53: { // STRING
        const text = r.line();
        const quote = text[0];
        if ((quote !== "'" && quote !== '"') || text[text.length - 1] !== quote) {
          throw new DataError("malformed STRING opcode payload");
        }
        stack.push(unescapeString(text.slice(1, -1)));
        break;
      }
      case 0x55: // SHORT_BINSTRING
        stack.push(r.bytes(r.u8()));
        break;
      case 0x54: // BINSTRING
        stack.push(r.bytes(r.u32()));
        break;
      case 0x42: // BINBYTES
        stack.push(r.bytes(r.u32()));
        break;
      case 0x43: // SHORT_BINBYTES
        stack.push(r.bytes(r.u8()));
        break;
      case 0x56: // UNICODE
        stack.push(decodeRawUnicode(r.line()));
        break;
      case 0x58: { // BINUNICODE
        const raw = r.bytes(r.u32());
        stack.push(Buffer.from(raw).toString("utf8"));
        break;
      }
      case 0x8c: { // SHORT_BINUNICODE
        const raw = r.bytes(r.u8());
        stack.push(Buffer.from(raw).toString("utf8"));
        break;
      }

      case 0x29: // EMPTY_TUPLE
        stack.push(new Tuple([]));
        break;
      case 0x85: // TUPLE1
        stack.push(new Tuple([pop()]));
        break;
      case 0x86: { // TUPLE2
        const b = pop(), a = pop();
        stack.push(new Tuple([a, b]));
        break;
      }
      case 0x87: { // TUPLE3
        const c = pop(), b = pop(), a = pop();
        stack.push(new Tuple([a, b, c]));
        break;
      }
      case 0x74: // TUPLE
        stack.push(new Tuple(popMark()));
        break;

      case 0x5d: // EMPTY_LIST
        stack.push([]);
        break;
      case 0x6c: // LIST
        stack.push(popMark());
        break;
      case 0x61: { // APPEND
        const v = pop();
        const list = stack[stack.length - 1];
        if (!Array.isArray(list)) throw new DataError("APPEND onto a non-list");
        list.push(v);
        break;
      }
      case 0x65: { // APPENDS
        const items = popMark();
        const list = stack[stack.length - 1];
        if (!Array.isArray(list)) throw new DataError("APPENDS onto a non-list");
        list.push(...items);
        break;
      }

      case 0x7d: // EMPTY_DICT
        stack.push(new Map());
        break;
      case 0x64: { // DICT
        const items = popMark();
        const m = new Map<string | number, PickleValue>();
        for (let i = 0; i < items.length; i += 2) m.set(dictKey(items[i]), items[i + 1]);
        stack.push(m);
        break;
      }
      case 0x73: { // SETITEM
        const v = pop(), k = pop();
        const m = stack[stack.length - 1];
        if (!(m instanceof Map)) throw new DataError("SETITEM onto a non-dict");
        m.set(dictKey(k), v);
        break;
      }
      case 0x75: { // SETITEMS
        const items = popMark();
        const m = stack[stack.length - 1];
        if (!(m instanceof Map)) throw new DataError("SETITEMS onto a non-dict");
        for (let i = 0; i < items.length; i += 2) m.set(dictKey(items[i]), items[i + 1]);
        break;
      }

      case 0x63: // GLOBAL
        stack.push(new Global(r.line(), r.line()));
        break;
      case 0x93: { // STACK_GLOBAL
        const name = pop(), module = pop();
        if (typeof module !== "string" || typeof name !== "string") {
          throw new DataError("STACK_GLOBAL expects two strings");
        }
        stack.push(new Global(module, name));
        break;
      }
      case 0x52: { // REDUCE
        const args = pop(), cls = pop();
        if (!(cls instanceof Global) || !(args instanceof Tuple)) {
          throw new DataError("REDUCE expects a global and an argument tuple");
        }
        stack.push(instantiate(cls, args.items));
        break;
      }
      case 0x81: { // NEWOBJ
        const args = pop(), cls = pop();
        if (!(cls instanceof Global) || !(args instanceof Tuple)) {
          throw new DataError("NEWOBJ expects a global and an argument tuple");
        }
        stack.push(instantiate(cls, args.items));
        break;
      }
      case 0x69: { // INST
        const module = r.line(), name = r.line();
        stack.push(instantiate(new Global(module, name), popMark()));
        break;
      }
      case 0x6f: { // OBJ
        const items = popMark();
        const cls = items.shift();
        if (!(cls instanceof Global)) throw new DataError("OBJ expects a class on the stack");
        stack.push(instantiate(cls, items));
        break;
      }
      case 0x62: { // BUILD
        const state = pop();
        const obj = stack[stack.length - 1];
        if (hooks.setState?.(obj, state)) break;
        if (obj instanceof Instance) {
          obj.state = state;
          break;
        }
        throw new DataError("BUILD target does not accept pickled state");
      }

      case 0x70: // PUT
        memo.set(parseInt(r.line(), 10), stack[stack.length - 1] as PickleValue);
        break;
      case 0x71: // BINPUT
        memo.set(r.u8(), stack[stack.length - 1] as PickleValue);
        break;
      case 0x72: // LONG_BINPUT
        memo.set(r.u32(), stack[stack.length - 1] as PickleValue);
        break;
      case 0x94: // MEMOIZE
        memo.set(memo.size, stack[stack.length - 1] as PickleValue);
        break;
      case 0x67: { // GET
        const idx = parseInt(r.line(), 10);
        if (!memo.has(idx)) throw new DataError(`pickle memo miss at ${idx}`);
        stack.push(memo.get(idx)!);
        break;
      }
      case 0x68: { // BINGET
        const idx = r.u8();
        if (!memo.has(idx)) throw new DataError(`pickle memo miss at ${idx}`);
        stack.push(memo.get(idx)!);
        break;
      }
      case 0x6a: { // LONG_BINGET
        const idx = r.u32();
        if (!memo.has(idx)) throw new DataError(`pickle memo miss at ${idx}`);
        stack.push(memo.get(idx)!);
        break;
      }

      default:
        throw new DataError(
          `unsupported pickle opcode 0x${op.toString(16)} at offset ${r.pos - 1}`,
        );
    }
  }
}

export { latin1 };
