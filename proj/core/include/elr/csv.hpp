#pragma once

#include "elr/trainer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace elr {

// Fixed RunLog CSV schema (see README for column semantics). Decimals are
// written at 17 significant digits so byte-level determinism checks hold.
extern const std::vector<std::string>& runlog_columns();

void write_runlog_csv(std::ostream& os, const RunLog& log);
std::string runlog_csv_string(const RunLog& log);

// Parses a metrics.csv back into records (losslessly for finite values).
std::vector<EpochRecord> read_runlog_csv(std::istream& is);

std::string format_double(double v);  // %.17g

// Write via temp file + rename so concurrent sweep runs never expose a
// partially written file.
void atomic_write_file(const std::string& path, const std::string& contents);

}  // namespace elr
