/** Reading the CLI's CSV tables: header row, `# units:` schema row, floats. */

import * as fs from "fs";
import Papa from "papaparse";

export interface Table {
  columns: string[];
  units: string[];
  rows: number[][];
}

export class SchemaError extends Error {}

export function readTable(path: string): Table {
  const text = fs.readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new SchemaError(`${path}: expected a header and a units row`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const unitsLine = lines[1];
  if (!unitsLine.startsWith("# units:")) {
    throw new SchemaError(`${path}: missing '# units:' schema row`);
  }
  const units = unitsLine.slice("# units:".length).split(",").map((u) => u.trim());
  const body = lines.slice(2).join("\n");
  const parsed = Papa.parse<string[]>(body, { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${path}: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data.map((record, i) => {
    if (record.length !== columns.length) {
      throw new SchemaError(
        `${path}: row ${i + 3} has ${record.length} fields, expected ${columns.length}`
      );
    }
    return record.map((v) => Number(v));
  });
  return { columns, units, rows };
}

/** Assert the table carries exactly the expected columns, in order. */
export function requireColumns(path: string, table: Table, expected: string[]): void {
  for (let i = 0; i < expected.length; i++) {
    if (table.columns[i] !== expected[i]) {
      throw new SchemaError(
        `${path}: expected column ${i + 1} to be '${expected[i]}', found '${table.columns[i] ?? "<missing>"}'`
      );
    }
  }
  if (table.columns.length !== expected.length) {
    throw new SchemaError(
      `${path}: unexpected extra column '${table.columns[expected.length]}'`
    );
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(`missing column '${name}'`);
  }
  return table.rows.map((r) => r[idx]);
}
