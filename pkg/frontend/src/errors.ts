/** Error taxonomy mirroring the consumer package's exit codes. */

export class ConvertError extends Error {
  constructor(message: string, readonly exitCode: number) {
    super(message);
    this.name = new.target.name;
  }
}

/** Bad invocation or malformed request: exit 1. */
export class UsageError extends ConvertError {
  constructor(message: string) {
    super(message, 1);
  }
}

/** Unreadable, inconsistent, or mismatched input data: exit 2. */
export class DataError extends ConvertError {
  constructor(message: string) {
    super(message, 2);
  }
}
