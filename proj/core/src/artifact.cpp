#include "focidose/artifact.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace focidose {

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc())
        throw NumericError("failed to format a double for serialization");
    return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("bad numeric value '" + std::string(text) + "'");
    return value;
}

namespace {

// Sequential line reader with position-aware errors.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string& line) {
        if (pos_ >= text_.size()) return false;
        const std::size_t end = text_.find('\n', pos_);
        if (end == std::string_view::npos) {
            line.assign(text_.substr(pos_));
            pos_ = text_.size();
        } else {
            line.assign(text_.substr(pos_, end - pos_));
            pos_ = end + 1;
        }
        ++line_no_;
        return true;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("line " + std::to_string(line_no_) + ": " + what);
    }

    std::string expect(std::string_view key) {
        std::string line;
        if (!next(line)) fail("unexpected end of file, expected '" + std::string(key) + "'");
        if (line.rfind(key, 0) != 0 ||
            (line.size() > key.size() && line[key.size()] != ' '))
            fail("expected '" + std::string(key) + "', found '" + line + "'");
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    }

    int line_no() const { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
};

std::vector<std::string> split_fields(const std::string& text) {
    std::vector<std::string> fields;
    std::istringstream in(text);
    std::string field;
    while (in >> field) fields.push_back(field);
    return fields;
}

std::uint64_t parse_u64(LineReader& reader, const std::string& text) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        reader.fail("bad unsigned integer '" + text + "'");
    return value;
}

void write_params_body(std::ostringstream& out, const MixtureParams& params) {
    out << "k " << params.k() << "\n";
    out << "shared_u " << (params.shared_u ? 1 : 0) << "\n";
    out << "weights";
    for (double w : params.weights) out << " " << format_double(w);
    out << "\n";
    for (int j = 0; j < params.k(); ++j) {
        const ComponentParams& comp = params.components[j];
        out << "component " << j + 1 << " " << format_double(comp.a) << " "
            << format_double(comp.c) << " " << format_double(comp.v);
        if (!params.shared_u) out << " " << format_double(comp.u);
        out << "\n";
    }
    if (params.shared_u) out << "u " << format_double(params.u) << "\n";
}

MixtureParams read_params_body(LineReader& reader) {
    MixtureParams params;
    const int k = static_cast<int>(parse_u64(reader, reader.expect("k")));
    if (k < 1) reader.fail("k must be >= 1");
    params.shared_u = parse_u64(reader, reader.expect("shared_u")) != 0;

    const auto weight_fields = split_fields(reader.expect("weights"));
    if (static_cast<int>(weight_fields.size()) != k)
        reader.fail("expected " + std::to_string(k) + " weights");
    for (const std::string& w : weight_fields)
        params.weights.push_back(parse_double(w));

    params.components.resize(k);
    for (int j = 0; j < k; ++j) {
        const auto fields = split_fields(reader.expect("component"));
        const std::size_t expected = params.shared_u ? 4 : 5;
        if (fields.size() != expected)
            reader.fail("component line needs " + std::to_string(expected) + " fields");
        if (fields[0] != std::to_string(j + 1))
            reader.fail("components must appear in order; found index " + fields[0]);
        params.components[j].a = parse_double(fields[1]);
        params.components[j].c = parse_double(fields[2]);
        params.components[j].v = parse_double(fields[3]);
        if (!params.shared_u) params.components[j].u = parse_double(fields[4]);
    }
    if (params.shared_u) {
        params.u = parse_double(reader.expect("u"));
        for (ComponentParams& comp : params.components) comp.u = params.u;
    }
    return params;
}

void write_box(std::ostringstream& out, const char* name, const ParamBox& box) {
    out << name << " " << format_double(box.lo) << " " << format_double(box.hi) << "\n";
}

ParamBox read_box(LineReader& reader, const char* name) {
    const auto fields = split_fields(reader.expect(name));
    if (fields.size() != 2) reader.fail(std::string(name) + " needs two bounds");
    return {parse_double(fields[0]), parse_double(fields[1])};
}

}  // namespace

std::string CalibrationArtifact::serialize() const {
    const CalibrationResult& r = result;
    std::ostringstream out;
    out << "focidose-calibration-v" << format_version << "\n";
    out << "tool_version " << tool_version << "\n";
    out << "provenance " << provenance << "\n";
    out << "seed " << seed << "\n";
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(r.data_digest));
        out << "data_digest " << buf << "\n";
    }
    write_params_body(out, r.params);
    out << "prior_perks " << (r.prior.perks ? 1 : 0) << "\n";
    write_box(out, "box_a", r.prior.a_box);
    write_box(out, "box_c", r.prior.c_box);
    write_box(out, "box_u", r.prior.u_box);
    write_box(out, "box_v", r.prior.v_box);
    out << "p " << r.p() << "\n";
    out << "parameter_order";
    for (const std::string& name : r.parameter_order) out << " " << name;
    out << "\n";
    out << "free_mode";
    for (Eigen::Index i = 0; i < r.free_mode.size(); ++i)
        out << " " << format_double(r.free_mode[i]);
    out << "\n";
    out << "log_posterior_at_mode " << format_double(r.log_posterior_at_mode) << "\n";
    out << "log_likelihood_at_mode " << format_double(r.log_likelihood_at_mode) << "\n";
    out << "aic " << format_double(r.aic) << "\n";
    out << "warnings " << r.warnings.size() << "\n";
    for (const std::string& w : r.warnings) out << "warning " << w << "\n";
    out << "covariance " << r.p() << "\n";
    for (int i = 0; i < r.p(); ++i) {
        for (int j = 0; j < r.p(); ++j) {
            if (j > 0) out << " ";
            out << format_double(r.covariance(i, j));
        }
        out << "\n";
    }
    out << "end\n";
    return out.str();
}

CalibrationArtifact CalibrationArtifact::parse(std::string_view text) {
    LineReader reader(text);
    CalibrationArtifact artifact;

    std::string header;
    if (!reader.next(header)) reader.fail("empty artifact");
    if (header != "focidose-calibration-v1")
        reader.fail("not a focidose calibration artifact (header '" + header + "')");
    artifact.format_version = 1;

    artifact.tool_version = reader.expect("tool_version");
    artifact.provenance = reader.expect("provenance");
    artifact.seed = parse_u64(reader, reader.expect("seed"));
    {
        const std::string digest = reader.expect("data_digest");
        if (digest.size() != 16) reader.fail("data digest must be 16 hex characters");
        std::uint64_t value = 0;
        auto [ptr, ec] =
            std::from_chars(digest.data(), digest.data() + 16, value, 16);
        if (ec != std::errc() || ptr != digest.data() + 16)
            reader.fail("bad data digest '" + digest + "'");
        artifact.result.data_digest = value;
    }

    CalibrationResult& r = artifact.result;
    r.params = read_params_body(reader);
    r.k = r.params.k();
    r.shared_u = r.params.shared_u;
    r.prior.perks = parse_u64(reader, reader.expect("prior_perks")) != 0;
    r.prior.a_box = read_box(reader, "box_a");
    r.prior.c_box = read_box(reader, "box_c");
    r.prior.u_box = read_box(reader, "box_u");
    r.prior.v_box = read_box(reader, "box_v");

    const int p = static_cast<int>(parse_u64(reader, reader.expect("p")));
    if (p != free_parameter_count(r.k, r.shared_u))
        reader.fail("p does not match K and the u mode");
    r.parameter_order = split_fields(reader.expect("parameter_order"));
    if (static_cast<int>(r.parameter_order.size()) != p)
        reader.fail("parameter_order length does not match p");

    const auto mode_fields = split_fields(reader.expect("free_mode"));
    if (static_cast<int>(mode_fields.size()) != p)
        reader.fail("free_mode length does not match p");
    r.free_mode.resize(p);
    for (int i = 0; i < p; ++i) r.free_mode[i] = parse_double(mode_fields[i]);

    r.log_posterior_at_mode = parse_double(reader.expect("log_posterior_at_mode"));
    r.log_likelihood_at_mode = parse_double(reader.expect("log_likelihood_at_mode"));
    r.aic = parse_double(reader.expect("aic"));

    const int warning_count =
        static_cast<int>(parse_u64(reader, reader.expect("warnings")));
    for (int i = 0; i < warning_count; ++i)
        r.warnings.push_back(reader.expect("warning"));

    const int cov_p = static_cast<int>(parse_u64(reader, reader.expect("covariance")));
    if (cov_p != p) reader.fail("covariance dimension does not match p");
    r.covariance.resize(p, p);
    std::string line;
    for (int i = 0; i < p; ++i) {
        if (!reader.next(line)) reader.fail("covariance row missing");
        const auto fields = split_fields(line);
        if (static_cast<int>(fields.size()) != p)
            reader.fail("covariance row " + std::to_string(i + 1) + " needs " +
                        std::to_string(p) + " entries");
        for (int j = 0; j < p; ++j) r.covariance(i, j) = parse_double(fields[j]);
    }
    if (reader.expect("end") != "") reader.fail("trailing content on end line");

    r.params.validate();
    return artifact;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FociDoseError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw FociDoseError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw FociDoseError("failed to move '" + tmp.string() + "' into place: " +
                            ec.message());
    }
}

void CalibrationArtifact::save(const std::filesystem::path& path) const {
    atomic_write(path, serialize());
}

CalibrationArtifact CalibrationArtifact::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FociDoseError("cannot open calibration artifact '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string serialize_params(const MixtureParams& params) {
    std::ostringstream out;
    out << "focidose-params-v1\n";
    write_params_body(out, params);
    out << "end\n";
    return out.str();
}

MixtureParams parse_params(std::string_view text) {
    LineReader reader(text);
    std::string header;
    if (!reader.next(header)) reader.fail("empty parameter file");
    if (header != "focidose-params-v1")
        reader.fail("not a focidose parameter file (header '" + header + "')");
    MixtureParams params = read_params_body(reader);
    if (reader.expect("end") != "") reader.fail("trailing content on end line");
    params.validate();
    return params;
}

MixtureParams load_params_or_artifact(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FociDoseError("cannot open parameter file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        if (text.rfind("focidose-calibration-v", 0) == 0)
            return CalibrationArtifact::parse(text).result.params;
        return parse_params(text);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace focidose
