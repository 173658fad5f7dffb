#include "pcarecon/io.hpp"

#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pcarecon::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
    throw Error(ErrorKind::InvalidInput, path.string() + ": " + what);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& v) {
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && ptr == end;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Positions of `names` within `header`. Extra header columns are allowed
// only when `allow_extra` is set.
std::vector<Eigen::Index> column_order(const Names& header, const Names& names, const fs::path& path,
                                       bool allow_extra = false) {
    if (header.size() < names.size() || (!allow_extra && header.size() != names.size()))
        fail(path, "expected " + std::to_string(names.size()) + " columns, found " + std::to_string(header.size()));
    std::vector<Eigen::Index> order;
    for (const auto& name : names) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) fail(path, "missing column '" + name + "'");
        order.push_back(it - header.begin());
    }
    return order;
}

}  // namespace

Table read_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    Table t;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            fail(path, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(t.header.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j)
            if (!parse_double(fields[j], row[j]))
                fail(path, "line " + std::to_string(line_no) + ": '" + fields[j] + "' is not a number");
        rows.push_back(std::move(row));
    }
    if (!have_header) fail(path, "empty file");
    t.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            t.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

std::string format_csv(const Names& header, const Matrix& rows) {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += '\n';
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            if (j) out += ',';
            out += format_full(rows(i, j));
        }
        out += '\n';
    }
    return out;
}

DataSet read_data(const fs::path& path, const fs::path* truth) {
    Table t = read_csv(path);
    if (t.rows.rows() == 0) fail(path, "no samples");
    std::optional<Matrix> x;
    if (truth) {
        Table tt = read_csv(*truth);
        const auto order = column_order(tt.header, t.header, *truth, true);
        if (tt.rows.rows() != t.rows.rows()) fail(*truth, "sample count differs from the measurement file");
        x = Matrix(tt.rows(Eigen::all, order).transpose());
    }
    return DataSet(t.rows.transpose(), std::move(t.header), std::move(x));
}

void write_data(const fs::path& path, const Names& names, const Matrix& n_by_samples) {
    atomic_write(path, format_csv(names, n_by_samples.transpose()));
}

ConstraintModel read_model(const fs::path& path, Provenance provenance) {
    Table t = read_csv(path);
    if (t.rows.rows() == 0) fail(path, "model file has no constraint rows");
    return ConstraintModel(std::move(t.rows), std::move(t.header), provenance);
}

Matrix read_constraint_rows(const fs::path& path, const Names& names) {
    Table t = read_csv(path);
    const auto order = column_order(t.header, names, path);
    return t.rows(Eigen::all, order);
}

void write_model(const fs::path& path, const ConstraintModel& model) {
    atomic_write(path, format_csv(model.variable_names(), model.matrix()));
}

NoiseModel read_noise(const fs::path& path, const Names& names) {
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line) && trim(line).empty()) {
    }
    const auto header = split(line);
    if (header.size() == 2 && header[0] == "variable" && header[1] == "sd") {
        std::map<std::string, double> sd;
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const auto f = split(line);
            double v = 0.0;
            if (f.size() != 2 || !parse_double(f[1], v))
                fail(path, "line " + std::to_string(line_no) + ": expected 'name,sd'");
            if (!sd.emplace(f[0], v).second) fail(path, "duplicate variable '" + f[0] + "'");
        }
        Vector out(static_cast<Eigen::Index>(names.size()));
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto it = sd.find(names[i]);
            if (it == sd.end()) fail(path, "missing variable '" + names[i] + "'");
            if (!(it->second > 0.0)) fail(path, "standard deviation of '" + names[i] + "' must be positive");
            out(static_cast<Eigen::Index>(i)) = it->second;
        }
        return NoiseModel::from_standard_deviations(out);
    }
    Table t = read_csv(path);
    if (t.rows.rows() != t.rows.cols()) fail(path, "full covariance must be square");
    const auto order = column_order(t.header, names, path, true);
    return NoiseModel::full(t.rows(order, order));
}

void write_noise(const fs::path& path, const NoiseModel& noise, const Names& names) {
    if (noise.structure() != NoiseModel::Structure::Full) {
        std::string out = "variable,sd\n";
        const Vector sd = noise.standard_deviations();
        for (std::size_t i = 0; i < names.size(); ++i)
            out += names[i] + "," + format_full(sd(static_cast<Eigen::Index>(i))) + "\n";
        atomic_write(path, out);
        return;
    }
    atomic_write(path, format_csv(names, noise.sigma()));
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
}

SimulationSpec parse_spec(const json& j) {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidInput, "spec: " + what); };
    try {
        if (!j.is_object()) bad("top level must be an object");
        if (j.value("spec_version", 0) != 1) bad("spec_version: expected 1");
        for (const char* key : {"variables", "constraints", "independent", "base_values", "fluctuation_sd", "error_sd",
                                "samples", "seed"})
            if (!j.contains(key)) bad(std::string(key) + ": missing");
        const auto names = j.at("variables").get<Names>();
        const auto rows = j.at("constraints").get<std::vector<std::vector<double>>>();
        Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != names.size())
                bad("constraints[" + std::to_string(i) + "]: expected " + std::to_string(names.size()) + " entries");
            for (std::size_t k = 0; k < rows[i].size(); ++k)
                a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
        const long long samples = j.at("samples").get<long long>();
        if (samples < 1 || samples > 100000000) bad("samples: must be between 1 and 1e8");
        const json& seed = j.at("seed");
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0))
            bad("seed: must be a non-negative integer");
        return SimulationSpec{ConstraintModel(std::move(a), names),
                              j.at("independent").get<Names>(),
                              j.at("base_values").get<std::map<std::string, double>>(),
                              j.at("fluctuation_sd").get<std::map<std::string, double>>(),
                              j.at("error_sd").get<std::map<std::string, double>>(),
                              static_cast<int>(samples),
                              j.at("seed").get<std::uint64_t>()};
    } catch (const json::exception& e) {
        bad(e.what());
    }
    return {ConstraintModel(Matrix(0, 1), {"x"}), {}, {}, {}, {}, 0, 0};
}

SimulationSpec read_spec(const fs::path& path) {
    json j = read_json(path);
    // Preset files wrap the spec in "simulation".
    if (j.is_object() && j.contains("simulation") && j["simulation"].is_object()) {
        json inner = j["simulation"];
        if (!inner.contains("spec_version") && j.contains("spec_version")) inner["spec_version"] = j["spec_version"];
        return parse_spec(inner);
    }
    return parse_spec(j);
}

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::InvalidInput, path.string() + ": cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(ErrorKind::InvalidInput, path.string() + ": write failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::InvalidInput, path.string() + ": rename failed");
    }
}

std::string format_full(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v + 0.0);  // no "-0"
    return buf;
}

}  // namespace pcarecon::io
