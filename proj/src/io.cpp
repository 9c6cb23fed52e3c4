#include "mft/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mft/version.hpp"

namespace mft::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
      line_(line) {}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

SpikeTrain parse_spike_train(std::istream& in, const std::string& source) {
    std::vector<double> times;
    std::optional<double> duration;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty()) {
            continue;
        }
        if (s[0] == '#') {
            const std::string body = trim(s.substr(1));
            if (body.rfind("T=", 0) == 0) {
                duration = to_double(body.substr(2));
                if (!duration || !(*duration > 0.0)) {
                    throw ParseError(source, lineno, "bad duration header '" + s + "'");
                }
            }
            continue;
        }
        const auto v = to_double(s);
        if (!v || !std::isfinite(*v)) {
            throw ParseError(source, lineno, "not a number: '" + s + "'");
        }
        if (!(*v > 0.0)) {
            throw ParseError(source, lineno, "spike times must be positive");
        }
        if (!times.empty() && !(*v > times.back())) {
            throw ParseError(source, lineno, "spike times must be strictly increasing");
        }
        times.push_back(*v);
    }
    if (times.empty()) {
        throw ParseError(source, 0, "no spike times");
    }
    const double T = duration.value_or(std::ceil(times.back()));
    if (times.back() > T) {
        throw ParseError(source, 0, "spike time beyond the declared duration");
    }
    return SpikeTrain(std::move(times), T);
}

SpikeTrain read_spike_train(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_spike_train(in, path.string());
}

void write_spike_train(const std::filesystem::path& path, const SpikeTrain& train,
                       const std::vector<std::string>& comments) {
    auto out = open_output(path);
    out << "# T=" << format_double(train.duration()) << '\n';
    for (const auto& c : comments) {
        out << "# " << c << '\n';
    }
    for (double t : train.times()) {
        out << format_double(t) << '\n';
    }
}

void write_change_points(const std::filesystem::path& path, const std::vector<double>& points,
                         const std::vector<std::string>& comments) {
    auto out = open_output(path);
    for (const auto& c : comments) {
        out << "# " << c << '\n';
    }
    for (double t : points) {
        out << format_double(t) << '\n';
    }
}

std::vector<double> read_change_points(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') {
            continue;
        }
        const auto v = to_double(s);
        if (!v) {
            throw ParseError(path.string(), lineno, "not a number: '" + s + "'");
        }
        out.push_back(*v);
    }
    return out;
}

namespace {

using KeyValues = std::map<std::string, std::pair<std::string, std::size_t>>;

class BlockReader {
public:
    BlockReader(const KeyValues& kv, const std::string& source, std::size_t header_line)
        : kv_(kv), source_(source), header_line_(header_line) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string text(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) {
            throw ParseError(source_, header_line_, "missing key '" + key + "'");
        }
        used_.push_back(key);
        return it->second.first;
    }

    double number(const std::string& key) const {
        const auto v = to_double(text(key));
        if (!v) {
            throw ParseError(source_, kv_.at(key).second, "key '" + key + "' is not a number");
        }
        return *v;
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        std::stringstream in(text(key));
        std::string item;
        while (std::getline(in, item, ',')) {
            const auto v = to_double(item);
            if (!v) {
                throw ParseError(source_, kv_.at(key).second, "bad list entry '" + item + "'");
            }
            out.push_back(*v);
        }
        return out;
    }

    void reject_unused() const {
        for (const auto& [key, value] : kv_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                throw ParseError(source_, value.second, "unknown key '" + key + "'");
            }
        }
    }

private:
    const KeyValues& kv_;
    const std::string& source_;
    std::size_t header_line_;
    mutable std::vector<std::string> used_;
};

Model model_from_block(const BlockReader& r, const std::string& source, std::size_t line) {
    const std::string kind = r.text("model");
    if (kind == "gamma") {
        return GammaRenewal{r.number("mean"), r.number("sd")};
    }
    if (kind == "ma") {
        auto coeffs = r.numbers("coeffs");
        std::string base = r.has("base") ? r.text("base") : "gamma";
        Distribution::Kind k;
        if (base == "gamma") {
            k = Distribution::Kind::gamma;
        } else if (base == "uniform") {
            k = Distribution::Kind::uniform;
        } else {
            throw ParseError(source, line, "unknown MA base '" + base + "'");
        }
        if (r.has("base_mean")) {
            MaModel m;
            m.coeffs = std::move(coeffs);
            const double bm = r.number("base_mean");
            const double bs = r.number("base_sd");
            m.base = k == Distribution::Kind::gamma ? Distribution::gamma(bm, bs)
                                                    : Distribution::uniform_moments(bm, bs);
            return m;
        }
        return MaModel::from_isi_moments(std::move(coeffs), r.number("mean"), r.number("sd"), k);
    }
    if (kind == "jitter") {
        return JitterModel{r.number("nu"), r.number("sigma1"), r.number("sigma2")};
    }
    if (kind == "bursty") {
        BurstyModel m;
        m.p_i = r.number("p_i");
        m.p_j = r.number("p_j");
        m.long_isi = Distribution::uniform(r.number("x_lo"), r.number("x_hi"));
        m.short_isi = Distribution::uniform(r.number("y_lo"), r.number("y_hi"));
        return m;
    }
    throw ParseError(source, line, "unknown model '" + kind + "'");
}

}  // namespace

ModelConfig parse_model_config(std::istream& in, const std::string& source) {
    ModelConfig cfg;
    std::vector<std::pair<KeyValues, std::size_t>> blocks;
    KeyValues top;
    KeyValues* current = &top;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') {
            continue;
        }
        if (s == "[segment]") {
            blocks.emplace_back(KeyValues{}, lineno);
            current = &blocks.back().first;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ParseError(source, lineno, "expected 'key = value'");
        }
        const std::string key = trim(s.substr(0, eq));
        if (key.empty()) {
            throw ParseError(source, lineno, "empty key");
        }
        if (!current->emplace(key, std::make_pair(trim(s.substr(eq + 1)), lineno)).second) {
            throw ParseError(source, lineno, "duplicate key '" + key + "'");
        }
    }

    try {
        if (blocks.empty()) {
            BlockReader r(top, source, 1);
            if (r.has("T")) {
                cfg.duration = r.number("T");
            }
            cfg.segments.push_back({model_from_block(r, source, 1), cfg.duration.value_or(1.0)});
            r.reject_unused();
        } else {
            cfg.piecewise = true;
            BlockReader head(top, source, 1);
            head.reject_unused();
            double total = 0.0;
            for (const auto& [kv, at] : blocks) {
                BlockReader r(kv, source, at);
                Segment seg{model_from_block(r, source, at), r.number("length")};
                r.reject_unused();
                total += seg.length;
                cfg.segments.push_back(std::move(seg));
            }
            cfg.duration = total;
        }
        for (const auto& seg : cfg.segments) {
            validate(seg.model);
        }
    } catch (const InvalidArgument& e) {
        throw ParseError(source, 0, e.what());
    }
    return cfg;
}

ModelConfig read_model_config(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_model_config(in, path.string());
}

nlohmann::ordered_json report_to_json(const DetectionReport& report,
                                      const nlohmann::ordered_json& config) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["format"] = "mft-detection-report";
    j["format_version"] = 1;
    j["library_version"] = kVersion;
    j["config"] = config;

    ordered_json test;
    test["statistic"] = report.test.decidable ? ordered_json(report.test.statistic) : ordered_json();
    test["threshold"] = report.test.q;
    test["threshold_source"] = to_string(report.test.source);
    test["reject"] = report.test.reject;
    test["decidable"] = report.test.decidable;
    test["m_used"] = report.m_used;
    j["test"] = test;

    j["change_points"] = ordered_json::array();
    for (const auto& c : report.change_points) {
        j["change_points"].push_back({{"time", c.time}, {"window", c.h}, {"r_value", c.r_value}});
    }
    j["rate_profile"] = ordered_json::array();
    for (const auto& s : report.rate_profile) {
        j["rate_profile"].push_back(
            {{"start", s.start}, {"end", s.end}, {"count", s.count}, {"rate", s.rate}});
    }

    ordered_json diag;
    diag["windows"] = ordered_json::array();
    for (const auto& w : report.windows) {
        diag["windows"].push_back({{"h", w.h},
                                   {"masked_fraction", w.masked_fraction},
                                   {"zeroed_fraction", w.zeroed_fraction}});
    }
    if (report.m_estimate) {
        ordered_json lags = ordered_json::array();
        for (const auto& l : report.m_estimate->per_lag) {
            lags.push_back({{"lag", l.lag}, {"median", l.median}, {"p_value", l.p_value}});
        }
        diag["m_estimate"] = {{"m_hat", report.m_estimate->m_hat},
                              {"section_len", report.m_estimate->section_len},
                              {"sections", report.m_estimate->n_sections},
                              {"lags", lags}};
    }
    diag["warnings"] = report.warnings;
    j["diagnostics"] = diag;
    return j;
}

void write_field_csv(const std::filesystem::path& path, const TestResult& test,
                     const nlohmann::ordered_json& config) {
    CsvTable t;
    t.meta = {{"format", "mft-field"}, {"library_version", kVersion}, {"config", config.dump()}};
    t.header = {"h", "t", "G", "R", "state"};
    for (const auto& f : test.fields) {
        for (std::size_t k = 0; k < f.grid.size(); ++k) {
            t.rows.push_back({format_double(f.h), format_double(f.grid[k]), format_double(f.g[k]),
                              format_double(f.r[k]), to_string(f.state[k])});
        }
    }
    write_csv(path, t);
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) {
        throw std::logic_error("CSV row width does not match the header");
    }
    rows.push_back(std::move(row));
}

std::optional<std::string> CsvTable::meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw std::out_of_range("no CSV column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (const auto& [k, v] : table.meta) {
        out << "# " << k << ": " << v << '\n';
    }
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out << (i ? "," : "") << csv_escape(cells[i]);
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) {
        line(r);
    }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    auto out = open_output(path);
    write_csv(out, table);
}

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!have_header && line[0] == '#') {
            const std::string body = line.substr(std::min<std::size_t>(2, line.size()));
            const auto colon = body.find(": ");
            if (colon == std::string::npos) {
                t.meta.emplace_back(trim(body), "");
            } else {
                t.meta.emplace_back(body.substr(0, colon), body.substr(colon + 2));
            }
            continue;
        }
        auto cells = csv_split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != t.header.size()) {
                throw ParseError(source, lineno, "row has " + std::to_string(cells.size()) +
                                                     " cells, header has " +
                                                     std::to_string(t.header.size()));
            }
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) {
        throw ParseError(source, 0, "missing CSV header");
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_csv(in, path.string());
}

}  // namespace mft::io
