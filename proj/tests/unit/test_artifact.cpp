#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "focidose/artifact.hpp"
#include "focidose/transform.hpp"
#include "test_oracles.hpp"

using namespace focidose;

namespace {

CalibrationArtifact sample_artifact(int k) {
    MixtureParams params;
    params.shared_u = true;
    for (int j = 0; j < k; ++j) {
        params.weights.push_back((j + 1.0) / (k * (k + 1.0) / 2.0));
        params.components.push_back(
            {0.5 + 0.7 * j, 0.3 + 0.45 * j, -0.1 * (j + 1), -0.2});
    }
    params.u = -0.2;

    const FreeParametrization map(k, true);
    CalibrationArtifact artifact;
    artifact.tool_version = "0.1.0";
    artifact.provenance = "synthetic fixture";
    artifact.seed = 17;
    CalibrationResult& r = artifact.result;
    r.params = params;
    r.free_mode = map.to_free(params);
    r.covariance = testsupport::random_spd<Eigen::MatrixXd>(map.dim(), 1e3, 40 + k);
    r.parameter_order = map.parameter_order();
    r.log_posterior_at_mode = -12345.6789012345;
    r.log_likelihood_at_mode = -12344.5678901234;
    r.aic = 2.0 * map.dim() - 2.0 * r.log_likelihood_at_mode;
    r.k = k;
    r.shared_u = true;
    r.data_digest = 0xdeadbeef12345678ULL;
    r.warnings = {"component 1 has weight 0.0001; K may exceed what the data identify"};
    return artifact;
}

}  // namespace

TEST_CASE("serialize -> parse -> serialize is byte identical") {
    const CalibrationArtifact artifact = sample_artifact(4);
    const std::string first = artifact.serialize();
    const CalibrationArtifact parsed = CalibrationArtifact::parse(first);
    const std::string second = parsed.serialize();
    CHECK(first == second);

    CHECK(parsed.result.k == 4);
    CHECK(parsed.result.p() == 16);
    CHECK(parsed.seed == 17);
    CHECK(parsed.provenance == "synthetic fixture");
    CHECK(parsed.result.data_digest == 0xdeadbeef12345678ULL);
    CHECK((parsed.result.covariance - artifact.result.covariance)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(parsed.result.free_mode == artifact.result.free_mode);
}

TEST_CASE("a 16-parameter artifact carries 256 covariance entries, 136 independent") {
    const CalibrationArtifact artifact = sample_artifact(4);
    const Eigen::MatrixXd& cov = artifact.result.covariance;
    REQUIRE(cov.rows() == 16);
    REQUIRE(cov.cols() == 16);
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    int independent = 0;
    for (int i = 0; i < 16; ++i)
        for (int j = i; j < 16; ++j) ++independent;
    CHECK(independent == 136);
    // 16 calibration coefficients: 3 free weights + 4*(a, c, v) + u
    CHECK(artifact.result.parameter_order.size() == 16);
}

TEST_CASE("doubles survive the text format exactly") {
    for (double value : {0.1, 1.0 / 3.0, 2.32933415909971, -1.6758497449847063e-07,
                         6.02e23, 5e-324}) {
        CHECK(parse_double(format_double(value)) == value);
    }
}

TEST_CASE("parse errors carry line positions") {
    const CalibrationArtifact artifact = sample_artifact(2);
    std::string text = artifact.serialize();

    CHECK_THROWS_WITH_AS(CalibrationArtifact::parse("nonsense\n"),
                         doctest::Contains("not a focidose calibration"), ParseError);

    // corrupt the weights line
    const std::size_t at = text.find("weights");
    std::string bad = text;
    bad.replace(at, 7, "weighst");
    CHECK_THROWS_WITH_AS(CalibrationArtifact::parse(bad), doctest::Contains("line"),
                         ParseError);

    // truncate mid-covariance
    std::string truncated = text.substr(0, text.find("covariance") + 14);
    CHECK_THROWS_AS(CalibrationArtifact::parse(truncated), ParseError);
}

TEST_CASE("save and load through the filesystem") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "focidose_artifact_test";
    fs::create_directories(dir);
    const fs::path path = dir / "calibration.txt";

    const CalibrationArtifact artifact = sample_artifact(3);
    artifact.save(path);
    const CalibrationArtifact loaded = CalibrationArtifact::load(path);
    CHECK(loaded.serialize() == artifact.serialize());
    CHECK(!fs::exists(path.string() + ".tmp"));
    fs::remove_all(dir);
}

TEST_CASE("params files parse and reject malformed input") {
    MixtureParams params;
    params.weights = {0.3, 0.7};
    params.components = {{0.8, 0.5, -0.3, -0.2}, {2.5, 1.5, -0.5, -0.2}};
    params.u = -0.2;
    const std::string text = serialize_params(params);
    const MixtureParams parsed = parse_params(text);
    CHECK(parsed.weights == params.weights);
    CHECK(parsed.components[1].a == params.components[1].a);
    CHECK(parsed.u == params.u);

    CHECK_THROWS_AS(parse_params("focidose-params-v2\n"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_params("focidose-params-v1\nk 2\nshared_u 1\nweights 0.3\n"),
        doctest::Contains("2 weights"), ParseError);
}

TEST_CASE("load_params_or_artifact accepts both formats") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "focidose_params_test";
    fs::create_directories(dir);

    const CalibrationArtifact artifact = sample_artifact(2);
    const fs::path artifact_path = dir / "artifact.txt";
    artifact.save(artifact_path);
    const MixtureParams from_artifact = load_params_or_artifact(artifact_path);
    CHECK(from_artifact.k() == 2);

    const fs::path params_path = dir / "params.txt";
    atomic_write(params_path, serialize_params(artifact.result.params));
    const MixtureParams from_params = load_params_or_artifact(params_path);
    CHECK(from_params.weights == from_artifact.weights);
    fs::remove_all(dir);
}
