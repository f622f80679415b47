#include "focidose/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "focidose/artifact.hpp"

namespace focidose {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

[[noreturn]] void fail_at(const std::filesystem::path& path, int line, int column,
                          const std::string& what) {
    std::ostringstream msg;
    msg << path.string() << ":" << line;
    if (column > 0) msg << " column " << column;
    msg << ": " << what;
    throw ParseError(msg.str());
}

double field_double(const std::filesystem::path& path, int line, int column,
                    const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        fail_at(path, line, column, "expected a number, found '" + text + "'");
    return value;
}

long field_integer(const std::filesystem::path& path, int line, int column,
                   const std::string& text) {
    long value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        fail_at(path, line, column, "expected an integer, found '" + text + "'");
    return value;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

CalibrationDataset read_calibration_csv(const std::filesystem::path& path,
                                        int max_count) {
    std::ifstream in(path);
    if (!in) throw FociDoseError("cannot open calibration data '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line))
        fail_at(path, 1, 0, "missing header");
    line = strip_cr(line);
    bool aggregated;
    if (line == "dose_gy,time_h,foci_count") {
        aggregated = false;
    } else if (line == "dose_gy,time_h,foci_count,cell_count") {
        aggregated = true;
    } else {
        fail_at(path, 1, 0,
                "header must be dose_gy,time_h,foci_count[,cell_count], found '" +
                    line + "'");
    }

    std::vector<FociRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const std::size_t expected = aggregated ? 4 : 3;
        if (fields.size() != expected)
            fail_at(path, line_no, 0,
                    "expected " + std::to_string(expected) + " fields, found " +
                        std::to_string(fields.size()));

        FociRecord record;
        record.dose_gy = field_double(path, line_no, 1, fields[0]);
        record.time_h = field_double(path, line_no, 2, fields[1]);
        const long count = field_integer(path, line_no, 3, fields[2]);
        if (record.dose_gy < 0.0)
            fail_at(path, line_no, 1, "dose must be >= 0 Gy");
        if (!(record.time_h > 0.0))
            fail_at(path, line_no, 2, "time must be > 0 h");
        if (count < 0) fail_at(path, line_no, 3, "foci count must be >= 0");
        if (count > max_count)
            fail_at(path, line_no, 3,
                    "foci count " + std::to_string(count) +
                        " exceeds the plausibility ceiling " +
                        std::to_string(max_count));
        record.count = static_cast<int>(count);

        long cells = 1;
        if (aggregated) {
            cells = field_integer(path, line_no, 4, fields[3]);
            if (cells < 0) fail_at(path, line_no, 4, "cell count must be >= 0");
        }
        for (long i = 0; i < cells; ++i) records.push_back(record);
    }
    if (records.empty()) fail_at(path, line_no, 0, "no data rows");
    try {
        return CalibrationDataset(std::move(records), path.filename().string(),
                                  max_count);
    } catch (const DomainError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<DesignPoint> read_design_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FociDoseError("cannot open design file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) fail_at(path, 1, 0, "missing header");
    line = strip_cr(line);
    if (line != "dose_gy,time_h,cell_count")
        fail_at(path, 1, 0, "header must be dose_gy,time_h,cell_count, found '" +
                                line + "'");

    std::vector<DesignPoint> design;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3)
            fail_at(path, line_no, 0, "expected 3 fields");
        DesignPoint point;
        point.dose_gy = field_double(path, line_no, 1, fields[0]);
        point.time_h = field_double(path, line_no, 2, fields[1]);
        const long cells = field_integer(path, line_no, 3, fields[2]);
        if (point.dose_gy < 0.0) fail_at(path, line_no, 1, "dose must be >= 0 Gy");
        if (!(point.time_h > 0.0)) fail_at(path, line_no, 2, "time must be > 0 h");
        if (cells < 0) fail_at(path, line_no, 3, "cell count must be >= 0");
        point.cells = static_cast<int>(cells);
        design.push_back(point);
    }
    if (design.empty()) fail_at(path, line_no, 0, "no design rows");
    return design;
}

void write_calibration_csv(const std::filesystem::path& path,
                           const CalibrationDataset& data) {
    std::ostringstream out;
    out << "dose_gy,time_h,foci_count\n";
    for (const FociRecord& r : data.records())
        out << format_double(r.dose_gy) << "," << format_double(r.time_h) << ","
            << r.count << "\n";
    atomic_write(path, out.str());
}

void write_density_csv(const std::filesystem::path& path,
                       const DosePosterior& posterior) {
    std::ostringstream out;
    out << "dose_gy,density\n";
    for (std::size_t i = 0; i < posterior.dose_grid.size(); ++i)
        out << format_double(posterior.dose_grid[i]) << ","
            << format_double(posterior.density[i]) << "\n";
    atomic_write(path, out.str());
}

void write_surface_csv(const std::filesystem::path& path,
                       const std::vector<SurfaceRow>& rows) {
    std::ostringstream out;
    out << "dose_gy,time_h,mu,sd\n";
    for (const SurfaceRow& row : rows)
        out << format_double(row.dose_gy) << "," << format_double(row.time_h) << ","
            << format_double(row.mu) << "," << format_double(row.sd) << "\n";
    atomic_write(path, out.str());
}

void write_oracle_report_csv(const std::filesystem::path& path,
                             const std::vector<oracle::OracleReport>& reports) {
    std::ostringstream out;
    out << "check,statistic,threshold,pass,seed,sample_size\n";
    for (const auto& r : reports)
        out << r.check << "," << format_double(r.statistic) << ","
            << format_double(r.threshold) << "," << (r.pass ? 1 : 0) << "," << r.seed
            << "," << r.sample_size << "\n";
    atomic_write(path, out.str());
}

}  // namespace focidose
