#pragma once

#include <string>
#include <vector>

#include "fbgskin/simulator.hpp"

namespace fbgskin {

// Dataset CSV: header row, then one row per frame with columns
// indentation_id, t_s, x_mm, y_mm, fz_N, dl01_nm ... dlNN_nm (6 decimal
// digits, rows grouped by indentation and time-sorted). A ".gz" path is
// transparently compressed.
void save_dataset_csv(const Dataset& dataset, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

// Frame-stream CSV for inference: t_s, dl01_nm ... dlNN_nm.
void save_frames_csv(const std::vector<SensorFrame>& frames, const std::string& path);
std::vector<SensorFrame> load_frames_csv(const std::string& path);

}  // namespace fbgskin
