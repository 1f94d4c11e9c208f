/**
 * Array containers plus readers for the two serialization surfaces the
 * upstream distributions use: pickled ndarrays / CSR matrices inside the
 * citation files, and .npy members of .npz archives for split masks.
 */

import { inflateRawSync } from "node:zlib";
import { DataError } from "./errors.js";
import { Global, Instance, PickleHooks, PickleValue, Tuple, latin1, loads } from "./pickle.js";

export interface DType {
  kind: "f" | "i" | "u" | "b";
  itemsize: 1 | 2 | 4 | 8;
}

/** Accepts '<f4', '|b1', '<i8', ... Big-endian payloads are rejected. */
export function parseDescr(descr: string): DType {
  const m = /^([<>|=])?([fiub])(\d)$/.exec(descr);
  if (!m) throw new DataError(`unsupported array descr ${JSON.stringify(descr)}`);
  const [, order, kind, sizeText] = m;
  const itemsize = Number(sizeText);
  if (order === ">") throw new DataError(`big-endian arrays are not supported (${descr})`);
  if (![1, 2, 4, 8].includes(itemsize)) {
    throw new DataError(`unsupported array item size in ${descr}`);
  }
  if (kind === "b" && itemsize !== 1) throw new DataError(`bad bool descr ${descr}`);
  return { kind: kind as DType["kind"], itemsize: itemsize as DType["itemsize"] };
}

export class NDArray {
  constructor(
    readonly dtype: DType,
    readonly shape: number[],
    readonly data: Uint8Array, // C-order
  ) {
    const count = shape.reduce((a, b) => a * b, 1);
    if (data.length !== count * dtype.itemsize) {
      throw new DataError(
        `array payload is ${data.length} bytes, expected ${count * dtype.itemsize} ` +
          `for shape (${shape.join(", ")}) ${dtype.kind}${dtype.itemsize}`,
      );
    }
  }

  get size(): number {
    return this.shape.reduce((a, b) => a * b, 1);
  }

  /** Flat numeric copy; bools become 0/1. */
  toNumbers(): Float64Array {
    const { kind, itemsize } = this.dtype;
    const out = new Float64Array(this.size);
    const view = new DataView(this.data.buffer, this.data.byteOffset, this.data.byteLength);
    for (let i = 0; i < out.length; i++) {
      const at = i * itemsize;
      if (kind === "f") {
        out[i] = itemsize === 8 ? view.getFloat64(at, true) : view.getFloat32(at, true);
      } else if (kind === "i") {
        if (itemsize === 8) {
          const v = view.getBigInt64(at, true);
          const n = Number(v);
          if (!Number.isSafeInteger(n)) throw new DataError("int64 value exceeds safe range");
          out[i] = n;
        } else if (itemsize === 4) out[i] = view.getInt32(at, true);
        else if (itemsize === 2) out[i] = view.getInt16(at, true);
        else out[i] = view.getInt8(at);
      } else if (kind === "u") {
        if (itemsize === 8) {
          const v = view.getBigUint64(at, true);
          const n = Number(v);
          if (!Number.isSafeInteger(n)) throw new DataError("uint64 value exceeds safe range");
          out[i] = n;
        } else if (itemsize === 4) out[i] = view.getUint32(at, true);
        else if (itemsize === 2) out[i] = view.getUint16(at, true);
        else out[i] = view.getUint8(at);
      } else {
        out[i] = this.data[at] ? 1 : 0;
      }
    }
    return out;
  }
}

export interface CsrMatrix {
  rows: number;
  cols: number;
  data: NDArray;
  indices: NDArray;
  indptr: NDArray;
}

/** Expand CSR storage into a dense row-major Float64Array. */
export function csrToDense(m: CsrMatrix): Float64Array {
  const dense = new Float64Array(m.rows * m.cols);
  const data = m.data.toNumbers();
  const indices = m.indices.toNumbers();
  const indptr = m.indptr.toNumbers();
  if (indptr.length !== m.rows + 1) {
    throw new DataError(`CSR indptr has ${indptr.length} entries for ${m.rows} rows`);
  }
  for (let row = 0; row < m.rows; row++) {
    for (let p = indptr[row]; p < indptr[row + 1]; p++) {
      const col = indices[p];
      if (col < 0 || col >= m.cols) {
        throw new DataError(`CSR column ${col} out of range for ${m.cols} columns`);
      }
      dense[row * m.cols + col] = data[p];
    }
  }
  return dense;
}

// ---------------------------------------------------------------------------
// Pickle hooks: ndarray / dtype / CSR reconstruction.

class ArrayStub {
  array: NDArray | undefined;
}

class DTypeStub {
  constructor(public descr: string) {}
}

const ARRAY_FACTORIES = new Set([
  "numpy.core.multiarray._reconstruct",
  "numpy._core.multiarray._reconstruct",
]);
const CSR_CLASSES = new Set([
  "scipy.sparse.csr.csr_matrix",
  "scipy.sparse._csr.csr_matrix",
  "scipy.sparse.csr_matrix",
]);

function asIntTuple(value: PickleValue, what: string): number[] {
  if (!(value instanceof Tuple)) throw new DataError(`pickled ${what} is not a tuple`);
  return value.items.map((v) => {
    if (typeof v !== "number") throw new DataError(`pickled ${what} holds a non-integer`);
    return v;
  });
}

function toBytes(value: PickleValue, what: string): Uint8Array {
  if (value instanceof Uint8Array) return value;
  throw new DataError(`pickled ${what} payload is not a byte string`);
}

export const numpyHooks: PickleHooks = {
  instantiate(cls: Global, args: PickleValue[]) {
    const q = cls.qualified;
    if (ARRAY_FACTORIES.has(q)) return new ArrayStub();
    if (q === "numpy.dtype" || q === "numpy._core.multiarray.dtype") {
      const descr = args[0];
      if (descr instanceof Uint8Array) return new DTypeStub(latin1(descr));
      if (typeof descr === "string") return new DTypeStub(descr);
      throw new DataError("pickled dtype without a descr string");
    }
    if (CSR_CLASSES.has(q)) return new Instance(cls, args);
    return undefined;
  },

  setState(obj: unknown, state: PickleValue): boolean {
    if (obj instanceof DTypeStub) {
      // state = (version, byteorder, ...); only the byte order matters here.
      if (state instanceof Tuple && state.items.length >= 2) {
        const order = state.items[1];
        const text = order instanceof Uint8Array ? latin1(order) : order;
        if (text === ">") throw new DataError("big-endian pickled arrays are not supported");
      }
      return true;
    }
    if (obj instanceof ArrayStub) {
      if (!(state instanceof Tuple) || state.items.length < 5) {
        throw new DataError("pickled ndarray state has an unexpected shape");
      }
      const [, shape, dtype, fortran, payload] = state.items;
      if (!(dtype instanceof DTypeStub)) {
        throw new DataError("pickled ndarray state lacks a dtype");
      }
      const dims = asIntTuple(shape, "ndarray shape");
      if (fortran === true && dims.length > 1) {
        throw new DataError("Fortran-ordered pickled arrays are not supported");
      }
      obj.array = new NDArray(parseDescr(dtype.descr), dims, toBytes(payload, "ndarray"));
      return true;
    }
    if (obj instanceof Instance && CSR_CLASSES.has(obj.cls.qualified)) {
      if (!(state instanceof Map)) throw new DataError("CSR matrix state is not a dict");
      obj.state = state;
      return true;
    }
    return false;
  },
};

/** Unwrap a loaded pickle value into NDArray / CsrMatrix / containers. */
export function materialize(value: PickleValue): unknown {
  if (value instanceof ArrayStub) {
    if (!value.array) throw new DataError("pickled ndarray was never given state");
    return value.array;
  }
  if (value instanceof Instance && CSR_CLASSES.has(value.cls.qualified)) {
    const state = value.state;
    if (!(state instanceof Map)) throw new DataError("CSR matrix state is not a dict");
    const shape = asIntTuple(state.get("_shape") ?? null, "CSR shape");
    if (shape.length !== 2) throw new DataError("CSR shape is not two-dimensional");
    const pull = (key: string): NDArray => {
      const raw = materialize(state.get(key) ?? null);
      if (!(raw instanceof NDArray)) throw new DataError(`CSR state field ${key} is not an array`);
      return raw;
    };
    return {
      rows: shape[0],
      cols: shape[1],
      data: pull("data"),
      indices: pull("indices"),
      indptr: pull("indptr"),
    } satisfies CsrMatrix;
  }
  if (Array.isArray(value)) return value.map(materialize);
  if (value instanceof Map) {
    const out = new Map<string | number, unknown>();
    for (const [k, v] of value) out.set(k, materialize(v));
    return out;
  }
  if (value instanceof Tuple) return new Tuple(value.items.map(materialize));
  return value;
}

export function loadPickle(data: Uint8Array): unknown {
  return materialize(loads(data, numpyHooks));
}

// ---------------------------------------------------------------------------
// .npy / .npz readers.

const NPY_MAGIC = Uint8Array.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY

export function parseNpy(data: Uint8Array): NDArray {
  for (let i = 0; i < NPY_MAGIC.length; i++) {
    if (data[i] !== NPY_MAGIC[i]) throw new DataError("not an .npy payload (bad magic)");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const major = data[6];
  let headerLen: number;
  let headerStart: number;
  if (major === 1) {
    headerLen = view.getUint16(8, true);
    headerStart = 10;
  } else if (major === 2 || major === 3) {
    headerLen = view.getUint32(8, true);
    headerStart = 12;
  } else {
    throw new DataError(`unsupported .npy format version ${major}`);
  }
  const header = latin1(data.subarray(headerStart, headerStart + headerLen));

  const descrMatch = /'descr':\s*'([^']*)'/.exec(header);
  const fortranMatch = /'fortran_order':\s*(True|False)/.exec(header);
  const shapeMatch = /'shape':\s*\(([^)]*)\)/.exec(header);
  if (!descrMatch || !fortranMatch || !shapeMatch) {
    throw new DataError("unparseable .npy header");
  }
  const shape = shapeMatch[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const n = parseInt(s, 10);
      if (!Number.isFinite(n) || n < 0) throw new DataError(`bad .npy shape entry ${s}`);
      return n;
    });
  if (fortranMatch[1] === "True" && shape.length > 1) {
    throw new DataError("Fortran-ordered .npy arrays are not supported");
  }
  const payload = data.subarray(headerStart + headerLen);
  return new NDArray(parseDescr(descrMatch[1]), shape, payload);
}

interface ZipEntry {
  name: string;
  method: number;
  compressedSize: number;
  localOffset: number;
}

const EOCD_SIG = 0x06054b50;
const CENTRAL_SIG = 0x02014b50;
const LOCAL_SIG = 0x04034b50;

function readZip(data: Uint8Array): Map<string, Uint8Array> {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let eocd = -1;
  for (let at = data.length - 22; at >= 0; at--) {
    if (view.getUint32(at, true) === EOCD_SIG) {
      eocd = at;
      break;
    }
  }
  if (eocd < 0) throw new DataError("not a zip archive (no end-of-directory record)");
  const entryCount = view.getUint16(eocd + 10, true);
  let at = view.getUint32(eocd + 16, true);

  const entries: ZipEntry[] = [];
  for (let i = 0; i < entryCount; i++) {
    if (view.getUint32(at, true) !== CENTRAL_SIG) {
      throw new DataError("corrupt zip central directory");
    }
    const method = view.getUint16(at + 10, true);
    const compressedSize = view.getUint32(at + 20, true);
    const nameLen = view.getUint16(at + 28, true);
    const extraLen = view.getUint16(at + 30, true);
    const commentLen = view.getUint16(at + 32, true);
    const localOffset = view.getUint32(at + 42, true);
    const name = latin1(data.subarray(at + 46, at + 46 + nameLen));
    entries.push({ name, method, compressedSize, localOffset });
    at += 46 + nameLen + extraLen + commentLen;
  }

  const out = new Map<string, Uint8Array>();
  for (const entry of entries) {
    const lo = entry.localOffset;
    if (view.getUint32(lo, true) !== LOCAL_SIG) {
      throw new DataError(`corrupt zip local header for ${entry.name}`);
    }
    const nameLen = view.getUint16(lo + 26, true);
    const extraLen = view.getUint16(lo + 28, true);
    const start = lo + 30 + nameLen + extraLen;
    const raw = data.subarray(start, start + entry.compressedSize);
    if (entry.method === 0) {
      out.set(entry.name, raw);
    } else if (entry.method === 8) {
      out.set(entry.name, new Uint8Array(inflateRawSync(raw)));
    } else {
      throw new DataError(`unsupported zip compression method ${entry.method}`);
    }
  }
  return out;
}

/** Read every array member of an .npz archive, keyed without the .npy suffix. */
export function readNpz(data: Uint8Array): Map<string, NDArray> {
  const out = new Map<string, NDArray>();
  for (const [name, payload] of readZip(data)) {
    const key = name.endsWith(".npy") ? name.slice(0, -4) : name;
    out.set(key, parseNpy(payload));
  }
  return out;
}
