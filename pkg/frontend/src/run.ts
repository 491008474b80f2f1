/** Shared entry-point plumbing: flags, exit codes, error reporting.
 *
 * Exit codes mirror the simulator CLI: 0 success, 2 usage, 3 bad input.
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { SchemaError } from "./csv.js";

export const EXIT_OK = 0;
export const EXIT_USAGE = 2;
export const EXIT_INPUT = 3;

export interface FigureSpec {
  usage: string;
  /** Figures overlaying several artifacts accept --input more than once. */
  multiInput?: boolean;
  render: (inputPaths: string[]) => string;
}

export function runFigure(argv: string[], spec: FigureSpec): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        input: { type: "string", multiple: true },
        output: { type: "string" },
        help: { type: "boolean" },
      },
    });
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error(spec.usage);
    return EXIT_USAGE;
  }
  if (parsed.values.help) {
    console.log(spec.usage);
    return EXIT_OK;
  }
  const inputs = parsed.values.input ?? [];
  const output = parsed.values.output;
  if (inputs.length === 0 || !output) {
    console.error(spec.usage);
    return EXIT_USAGE;
  }
  if (!spec.multiInput && inputs.length > 1) {
    console.error("this figure takes exactly one --input");
    console.error(spec.usage);
    return EXIT_USAGE;
  }
  let svg: string;
  try {
    svg = spec.render(inputs);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(err.message);
      return EXIT_INPUT;
    }
    if (err instanceof Error && "code" in err && err.code === "ENOENT") {
      console.error(err.message);
      return EXIT_INPUT;
    }
    throw err;
  }
  writeFileSync(output, svg);
  return EXIT_OK;
}

export function isDirectRun(moduleUrl: string): boolean {
  return process.argv[1] !== undefined && moduleUrl === pathToFileURL(process.argv[1]).href;
}
