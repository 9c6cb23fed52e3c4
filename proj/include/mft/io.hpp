#pragma once

// File formats: spike-time text files, key-value model configs, JSON detection
// reports and CSV tables with a commented metadata header.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mft/core.hpp"
#include "mft/detect.hpp"
#include "mft/simulate.hpp"

namespace mft::io {

/// Input could not be parsed; line is 1-based (0 when not line-specific).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// One ascending time per line. "# T=<duration>" sets T; other '#' lines are
/// ignored. Without a header T is the last time rounded up to a whole second.
SpikeTrain parse_spike_train(std::istream& in, const std::string& source = "<stream>");
SpikeTrain read_spike_train(const std::filesystem::path& path);

/// Writes "# T=..." and any extra comment lines followed by the times.
void write_spike_train(const std::filesystem::path& path, const SpikeTrain& train,
                       const std::vector<std::string>& comments = {});

/// Change-point sidecar: one time per line, '#' comments allowed.
void write_change_points(const std::filesystem::path& path, const std::vector<double>& points,
                         const std::vector<std::string>& comments = {});
std::vector<double> read_change_points(const std::filesystem::path& path);

/// Model file: "key = value" lines. A single model fills the whole duration;
/// "[segment]" headers start piecewise segments, each with a "length" key.
struct ModelConfig {
    std::vector<Segment> segments;
    /// True when built from [segment] blocks (lengths given explicitly).
    bool piecewise = false;
    std::optional<double> duration;
};

ModelConfig parse_model_config(std::istream& in, const std::string& source = "<stream>");
ModelConfig read_model_config(const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const DetectionReport& report,
                                      const nlohmann::ordered_json& config);

/// Columns h, t, G, R, state.
void write_field_csv(const std::filesystem::path& path, const TestResult& test,
                     const nlohmann::ordered_json& config);

/// Tidy table; metadata goes into "# key: value" lines ahead of the header.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    std::optional<std::string> meta_value(const std::string& key) const;
    std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace mft::io
