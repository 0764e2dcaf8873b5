#pragma once

#include <string>

#include "fbgskin/evaluation.hpp"

namespace fbgskin {

// Writes tables/*.csv and maps/*.csv under out_dir, then assembles
// report.txt and figures/*.svg from those tables.
void write_report_bundle(const EvalReport& report, const std::string& out_dir);

// Regenerates report.txt and figures/*.svg from an existing tables/
// directory (the `report` subcommand).
void assemble_report(const std::string& dir);

}  // namespace fbgskin
