#pragma once

#include <filesystem>
#include <vector>

#include "focidose/estimate.hpp"
#include "focidose/model.hpp"
#include "focidose/oracle.hpp"
#include "focidose/surface.hpp"
#include "focidose/types.hpp"

namespace focidose {

// Calibration data: header dose_gy,time_h,foci_count with one row per cell,
// or dose_gy,time_h,foci_count,cell_count with aggregated rows that expand
// to cell_count identical records. Malformed rows fail with line and column.
CalibrationDataset read_calibration_csv(const std::filesystem::path& path,
                                        int max_count = CalibrationDataset::kDefaultMaxCount);

// Sampling design: header dose_gy,time_h,cell_count.
std::vector<DesignPoint> read_design_csv(const std::filesystem::path& path);

void write_calibration_csv(const std::filesystem::path& path,
                           const CalibrationDataset& data);
void write_density_csv(const std::filesystem::path& path, const DosePosterior& posterior);
void write_surface_csv(const std::filesystem::path& path,
                       const std::vector<SurfaceRow>& rows);
void write_oracle_report_csv(const std::filesystem::path& path,
                             const std::vector<oracle::OracleReport>& reports);

}  // namespace focidose
