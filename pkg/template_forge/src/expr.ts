/**
 * Compiles the scalar expressions found in problem documents into JavaScript
 * source text, so rendered programs can evaluate initial conditions and
 * sources without dragging a parser along.
 *
 * Grammar: numbers, identifiers, + - * / ^ (or **), parentheses, unary minus,
 * and the call forms sin(...), cos(...), exp(...), tanh(...).  The only
 * predefined constant is pi.
 */

export class ExpressionError extends Error {}

const FUNCTIONS: Record<string, string> = {
  sin: "Math.sin",
  cos: "Math.cos",
  exp: "Math.exp",
  tanh: "Math.tanh",
};

type Token =
  | { kind: "num"; text: string }
  | { kind: "name"; text: string }
  | { kind: "op"; text: string };

function tokenize(src: string): Token[] {
  const out: Token[] = [];
  let i = 0;
  while (i < src.length) {
    const ch = src[i];
    if (ch === " " || ch === "\t" || ch === "\n") {
      i++;
      continue;
    }
    if (/[0-9.]/.test(ch)) {
      const m = /^\d*\.?\d+(?:[eE][+-]?\d+)?/.exec(src.slice(i));
      if (!m) throw new ExpressionError(`bad number at ${i} in ${JSON.stringify(src)}`);
      out.push({ kind: "num", text: m[0] });
      i += m[0].length;
      continue;
    }
    if (/[A-Za-z_]/.test(ch)) {
      const m = /^[A-Za-z_][A-Za-z_0-9]*/.exec(src.slice(i))!;
      out.push({ kind: "name", text: m[0] });
      i += m[0].length;
      continue;
    }
    if (src.startsWith("**", i)) {
      out.push({ kind: "op", text: "^" });
      i += 2;
      continue;
    }
    if ("+-*/^(),".includes(ch)) {
      out.push({ kind: "op", text: ch });
      i++;
      continue;
    }
    throw new ExpressionError(`unexpected character ${JSON.stringify(ch)} in ${JSON.stringify(src)}`);
  }
  return out;
}

class Parser {
  private pos = 0;

  constructor(
    private readonly tokens: Token[],
    private readonly vars: ReadonlySet<string>,
    private readonly src: string,
  ) {}

  private peek(): Token | undefined {
    return this.tokens[this.pos];
  }

  private expectOp(text: string): void {
    const tok = this.tokens[this.pos];
    if (!tok || tok.kind !== "op" || tok.text !== text) {
      throw new ExpressionError(`expected ${JSON.stringify(text)} in ${JSON.stringify(this.src)}`);
    }
    this.pos++;
  }

  parse(): string {
    const body = this.additive();
    if (this.pos !== this.tokens.length) {
      throw new ExpressionError(`trailing input in ${JSON.stringify(this.src)}`);
    }
    return body;
  }

  private additive(): string {
    let left = this.multiplicative();
    for (;;) {
      const tok = this.peek();
      if (tok?.kind === "op" && (tok.text === "+" || tok.text === "-")) {
        this.pos++;
        left = `(${left} ${tok.text} ${this.multiplicative()})`;
      } else {
        return left;
      }
    }
  }

  private multiplicative(): string {
    let left = this.unary();
    for (;;) {
      const tok = this.peek();
      if (tok?.kind === "op" && (tok.text === "*" || tok.text === "/")) {
        this.pos++;
        left = `(${left} ${tok.text} ${this.unary()})`;
      } else {
        return left;
      }
    }
  }

  private unary(): string {
    const tok = this.peek();
    if (tok?.kind === "op" && tok.text === "-") {
      this.pos++;
      return `(-${this.unary()})`;
    }
    if (tok?.kind === "op" && tok.text === "+") {
      this.pos++;
      return this.unary();
    }
    return this.power();
  }

  private power(): string {
    const base = this.atom();
    const tok = this.peek();
    if (tok?.kind === "op" && tok.text === "^") {
      this.pos++;
      // right-associative, and the exponent may itself be signed: 2^-3
      return `Math.pow(${base}, ${this.unary()})`;
    }
    return base;
  }

  private atom(): string {
    const tok = this.peek();
    if (!tok) throw new ExpressionError(`unexpected end of ${JSON.stringify(this.src)}`);
    if (tok.kind === "num") {
      this.pos++;
      return tok.text;
    }
    if (tok.kind === "op" && tok.text === "(") {
      this.pos++;
      const inner = this.additive();
      this.expectOp(")");
      return `(${inner})`;
    }
    if (tok.kind === "name") {
      this.pos++;
      if (this.peek()?.kind === "op" && this.peek()?.text === "(") {
        const fn = FUNCTIONS[tok.text];
        if (!fn) throw new ExpressionError(`unknown function ${JSON.stringify(tok.text)}`);
        this.expectOp("(");
        const arg = this.additive();
        this.expectOp(")");
        return `${fn}(${arg})`;
      }
      if (tok.text === "pi") return "Math.PI";
      if (!this.vars.has(tok.text)) {
        throw new ExpressionError(
          `unknown variable ${JSON.stringify(tok.text)} in ${JSON.stringify(this.src)}`,
        );
      }
      return tok.text;
    }
    throw new ExpressionError(`unexpected ${JSON.stringify(tok.text)} in ${JSON.stringify(this.src)}`);
  }
}

/** Compile to a JS expression string over the given variable names. */
export function compileExpr(src: string, vars: Iterable<string>): string {
  return new Parser(tokenize(src), new Set(vars), src).parse();
}

/** Evaluate an expression that must not reference any variables. */
export function evalConstant(src: string): number {
  const body = compileExpr(src, []);
  const value = Function(`"use strict"; return (${body});`)() as number;
  if (!Number.isFinite(value)) throw new ExpressionError(`non-finite constant ${JSON.stringify(src)}`);
  return value;
}

/** True when the expression evaluates to a constant (no free variables). */
export function isConstant(src: string): boolean {
  try {
    evalConstant(src);
    return true;
  } catch {
    return false;
  }
}

/** Compile to the source text of a JS arrow function over the named arguments. */
export function compileFunction(src: string, args: readonly string[]): string {
  const body = compileExpr(src, args);
  return `(${args.join(", ")}) => ${body}`;
}
