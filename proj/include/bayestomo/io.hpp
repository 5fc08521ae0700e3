#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bayestomo/forward.hpp"
#include "bayestomo/model.hpp"
#include "bayestomo/spatial.hpp"

namespace bayestomo {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace io {

// ---- number formatting: shortest round-trip, locale-independent ----

inline std::string format_double(double v) {
    std::array<char, 32> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw IoError("format_double failed");
    return std::string(buf.data(), p);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw IoError("bad numeric field '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw IoError("bad integer field '" + std::string(s) + "'");
    return v;
}

// ---- explicit little-endian binary primitives ----

inline void write_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b.data(), 8);
}

inline void write_f64(std::ostream& os, double v) {
    write_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline bool read_u32(std::istream& is, std::uint32_t& v) {
    std::array<unsigned char, 4> b;
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}

inline bool read_u64(std::istream& is, std::uint64_t& v) {
    std::array<unsigned char, 8> b;
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

inline bool read_f64(std::istream& is, double& v) {
    std::uint64_t u;
    if (!read_u64(is, u)) return false;
    v = std::bit_cast<double>(u);
    return true;
}

// ---- CSV helpers: '#' comment lines carry the config hash ----

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// Reads a CSV file, skipping '#' comments; the first remaining line must
/// equal `expected_header`.
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                                      const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    bool header_seen = false;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != expected_header)
                throw IoError(path.string() + ": expected header '" + expected_header +
                              "', got '" + line + "'");
            header_seen = true;
            continue;
        }
        rows.push_back(split_csv_line(line));
    }
    if (!header_seen) throw IoError(path.string() + ": missing header");
    return rows;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

inline std::string hash_comment(std::uint64_t config_hash) {
    std::ostringstream os;
    os << "# config_hash=" << std::hex << config_hash << '\n';
    return os.str();
}

/// Extracts a "# config_hash=..." comment if present in the leading lines.
inline std::optional<std::uint64_t> read_hash_comment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] != '#') break;
        auto pos = line.find("config_hash=");
        if (pos != std::string::npos) {
            std::string hex = line.substr(pos + 12);
            while (!hex.empty() && (hex.back() == '\r' || hex.back() == ' ')) hex.pop_back();
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
            if (ec == std::errc() && p == hex.data() + hex.size()) return v;
        }
    }
    return std::nullopt;
}

} // namespace io

// ---- geometry and vector CSV formats ----

inline void write_nodes_csv(const std::filesystem::path& path, const NodeSet& nodes,
                            std::uint64_t config_hash) {
    auto out = io::open_output(path);
    out << io::hash_comment(config_hash) << "id,x,y,z\n";
    for (int i = 0; i < nodes.count(); ++i)
        out << i << ',' << io::format_double(nodes.coords[i][0]) << ','
            << io::format_double(nodes.coords[i][1]) << ','
            << io::format_double(nodes.coords[i][2]) << '\n';
}

inline NodeSet load_nodes_csv(const std::filesystem::path& path) {
    NodeSet nodes;
    for (const auto& row : io::read_csv(path, "id,x,y,z")) {
        if (row.size() != 4) throw IoError(path.string() + ": expected 4 fields per row");
        nodes.coords.push_back(
            {io::parse_double(row[1]), io::parse_double(row[2]), io::parse_double(row[3])});
    }
    nodes.validate();
    return nodes;
}

inline void write_geometry_csv(const std::filesystem::path& dir,
                               const EventStationGeometry& geom, std::uint64_t config_hash) {
    {
        auto out = io::open_output(dir / "events.csv");
        out << io::hash_comment(config_hash) << "id,x,y,z\n";
        for (int i = 0; i < geom.n_events(); ++i)
            out << i << ',' << io::format_double(geom.events[i][0]) << ','
                << io::format_double(geom.events[i][1]) << ','
                << io::format_double(geom.events[i][2]) << '\n';
    }
    {
        auto out = io::open_output(dir / "stations.csv");
        out << io::hash_comment(config_hash) << "id,x,y\n";
        for (int i = 0; i < geom.n_stations(); ++i)
            out << i << ',' << io::format_double(geom.stations[i][0]) << ','
                << io::format_double(geom.stations[i][1]) << '\n';
    }
    {
        auto out = io::open_output(dir / "paths.csv");
        out << io::hash_comment(config_hash) << "event_id,station_id\n";
        for (const auto& [e, s] : geom.paths) out << e << ',' << s << '\n';
    }
}

inline EventStationGeometry load_geometry_csv(const std::filesystem::path& events_csv,
                                              const std::filesystem::path& stations_csv,
                                              const std::filesystem::path& paths_csv) {
    EventStationGeometry geom;
    for (const auto& row : io::read_csv(events_csv, "id,x,y,z")) {
        if (row.size() != 4) throw IoError("events: expected 4 fields per row");
        geom.events.push_back(
            {io::parse_double(row[1]), io::parse_double(row[2]), io::parse_double(row[3])});
    }
    for (const auto& row : io::read_csv(stations_csv, "id,x,y")) {
        if (row.size() != 3) throw IoError("stations: expected 3 fields per row");
        geom.stations.push_back({io::parse_double(row[1]), io::parse_double(row[2])});
    }
    for (const auto& row : io::read_csv(paths_csv, "event_id,station_id")) {
        if (row.size() != 2) throw IoError("paths: expected 2 fields per row");
        geom.paths.emplace_back(static_cast<int>(io::parse_int(row[0])),
                                static_cast<int>(io::parse_int(row[1])));
    }
    geom.validate();
    return geom;
}

inline void write_vector_csv(const std::filesystem::path& path, const std::string& name,
                             std::span<const double> values, std::uint64_t config_hash) {
    auto out = io::open_output(path);
    out << io::hash_comment(config_hash) << "id," << name << '\n';
    for (std::size_t i = 0; i < values.size(); ++i)
        out << i << ',' << io::format_double(values[i]) << '\n';
}

inline std::vector<double> load_vector_csv(const std::filesystem::path& path,
                                           const std::string& name) {
    std::vector<double> v;
    for (const auto& row : io::read_csv(path, "id," + name)) {
        if (row.size() != 2) throw IoError(path.string() + ": expected 2 fields per row");
        v.push_back(io::parse_double(row[1]));
    }
    return v;
}

// ---- forward-matrix binary: magic header + little-endian triplets ----

inline constexpr std::uint32_t forward_magic = 0x4d46'5442; // "BTFM"
inline constexpr std::uint32_t forward_version = 1;

inline void write_forward_binary(const std::filesystem::path& path, const ForwardProblem& fp,
                                 std::uint64_t config_hash) {
    auto out = io::open_output(path);
    io::write_u32(out, forward_magic);
    io::write_u32(out, forward_version);
    io::write_u64(out, config_hash);
    io::write_u32(out, fp.model == ModelKind::model2 ? 2u : 1u);
    io::write_u32(out, static_cast<std::uint32_t>(fp.d_usa));
    io::write_u32(out, static_cast<std::uint32_t>(fp.n_events));
    io::write_u32(out, static_cast<std::uint32_t>(fp.X.rows()));
    io::write_u32(out, static_cast<std::uint32_t>(fp.X.cols()));
    io::write_u64(out, static_cast<std::uint64_t>(fp.X.nnz()));
    const auto& rp = fp.X.row_ptr();
    const auto& ci = fp.X.col_idx();
    const auto& xv = fp.X.values();
    for (int r = 0; r < fp.X.rows(); ++r)
        for (int p = rp[r]; p < rp[r + 1]; ++p) {
            io::write_u32(out, static_cast<std::uint32_t>(r));
            io::write_u32(out, static_cast<std::uint32_t>(ci[p]));
            io::write_f64(out, xv[p]);
        }
    if (!out) throw IoError("failed writing " + path.string());
}

/// Loads the matrix part of a problem; y must be supplied separately.
inline ForwardProblem load_forward_binary(const std::filesystem::path& path,
                                          std::uint64_t* config_hash_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint32_t magic, version, model, d_usa, n_events, rows, cols;
    std::uint64_t hash, nnz;
    if (!io::read_u32(in, magic) || magic != forward_magic)
        throw IoError(path.string() + ": bad magic");
    if (!io::read_u32(in, version) || version != forward_version)
        throw IoError(path.string() + ": unsupported version");
    if (!io::read_u64(in, hash) || !io::read_u32(in, model) || !io::read_u32(in, d_usa) ||
        !io::read_u32(in, n_events) || !io::read_u32(in, rows) || !io::read_u32(in, cols) ||
        !io::read_u64(in, nnz))
        throw IoError(path.string() + ": truncated header");
    if (config_hash_out) *config_hash_out = hash;

    ForwardProblem fp;
    fp.model = model == 2 ? ModelKind::model2 : ModelKind::model1;
    fp.d_usa = static_cast<int>(d_usa);
    fp.n_events = static_cast<int>(n_events);
    fp.X = SparseRowMatrix(static_cast<int>(rows), static_cast<int>(cols));

    std::vector<std::pair<int, double>> row;
    std::uint32_t expect_row = 0;
    for (std::uint64_t t = 0; t < nnz; ++t) {
        std::uint32_t r, c;
        double v;
        if (!io::read_u32(in, r) || !io::read_u32(in, c) || !io::read_f64(in, v))
            throw IoError(path.string() + ": truncated triplets");
        if (r < expect_row || r >= rows) throw IoError(path.string() + ": rows out of order");
        while (expect_row < r) {
            fp.X.push_row(row);
            row.clear();
            ++expect_row;
        }
        row.emplace_back(static_cast<int>(c), v);
    }
    while (expect_row < rows) {
        fp.X.push_row(row);
        row.clear();
        ++expect_row;
    }
    return fp;
}

// ---- trace: framed binary records, one per stored draw ----

inline constexpr std::uint32_t trace_magic = 0x5254'5442; // "BTTR"
inline constexpr std::uint32_t trace_version = 1;

/// Streams stored draws as self-contained frames so a partial file is
/// readable up to the last complete record.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, std::uint64_t config_hash, int dim, int d_usa,
                ModelKind model, int structure, std::vector<int> stored_nodes = {})
        : out_(io::open_output(path)), stored_nodes_(std::move(stored_nodes)), dim_(dim) {
        io::write_u32(out_, trace_magic);
        io::write_u32(out_, trace_version);
        io::write_u64(out_, config_hash);
        io::write_u32(out_, static_cast<std::uint32_t>(dim));
        io::write_u32(out_, static_cast<std::uint32_t>(d_usa));
        io::write_u32(out_, model == ModelKind::model2 ? 2u : 1u);
        io::write_u32(out_, static_cast<std::uint32_t>(structure));
        io::write_u32(out_, static_cast<std::uint32_t>(stored_nodes_.size()));
        for (int n : stored_nodes_) io::write_u32(out_, static_cast<std::uint32_t>(n));
        out_.flush();
    }

    /// Number of beta values per record (all, unless a node subset was given).
    int beta_values_per_record() const {
        return stored_nodes_.empty() ? dim_ : static_cast<int>(stored_nodes_.size());
    }

    void append(std::int64_t iteration, std::span<const double> beta, double eta_usa,
                double eta_hyp, double eta_time, double phi, double psi, double log_likelihood,
                double log_posterior) {
        const std::uint32_t frame_len =
            8 + 7 * 8 + 8 * static_cast<std::uint32_t>(beta_values_per_record());
        io::write_u32(out_, frame_len);
        io::write_u64(out_, static_cast<std::uint64_t>(iteration));
        io::write_f64(out_, eta_usa);
        io::write_f64(out_, eta_hyp);
        io::write_f64(out_, eta_time);
        io::write_f64(out_, phi);
        io::write_f64(out_, psi);
        io::write_f64(out_, log_likelihood);
        io::write_f64(out_, log_posterior);
        if (stored_nodes_.empty()) {
            for (double v : beta) io::write_f64(out_, v);
        } else {
            for (int n : stored_nodes_) io::write_f64(out_, beta[n]);
        }
        out_.flush();
    }

private:
    std::ofstream out_;
    std::vector<int> stored_nodes_;
    int dim_;
};

/// Reads back a trace as ChainSamples. Stops cleanly at the last complete
/// frame, so interrupted runs stay usable.
inline ChainSamples load_trace(const std::filesystem::path& path,
                               std::uint64_t* config_hash_out = nullptr,
                               std::vector<int>* stored_nodes_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint32_t magic, version, dim, d_usa, model, structure, n_nodes;
    std::uint64_t hash;
    if (!io::read_u32(in, magic) || magic != trace_magic)
        throw IoError(path.string() + ": bad magic");
    if (!io::read_u32(in, version) || version != trace_version)
        throw IoError(path.string() + ": unsupported version");
    if (!io::read_u64(in, hash) || !io::read_u32(in, dim) || !io::read_u32(in, d_usa) ||
        !io::read_u32(in, model) || !io::read_u32(in, structure) || !io::read_u32(in, n_nodes))
        throw IoError(path.string() + ": truncated header");
    std::vector<int> nodes(n_nodes);
    for (auto& n : nodes) {
        std::uint32_t v;
        if (!io::read_u32(in, v)) throw IoError(path.string() + ": truncated node list");
        n = static_cast<int>(v);
    }
    if (config_hash_out) *config_hash_out = hash;
    if (stored_nodes_out) *stored_nodes_out = nodes;

    const int beta_len = nodes.empty() ? static_cast<int>(dim) : static_cast<int>(nodes.size());
    ChainSamples s;
    s.dim = beta_len; // beta columns actually present in the trace
    s.d_usa = static_cast<int>(d_usa);
    s.model = model == 2 ? ModelKind::model2 : ModelKind::model1;
    s.structure = static_cast<int>(structure);

    for (;;) {
        std::uint32_t frame_len;
        if (!io::read_u32(in, frame_len)) break;
        std::vector<char> frame(frame_len);
        if (!in.read(frame.data(), frame_len)) break; // partial trailing record
        std::istringstream fs(std::string(frame.data(), frame.size()), std::ios::binary);
        std::uint64_t iter;
        double eu, eh, et, phi, psi, ll, lp;
        if (!io::read_u64(fs, iter) || !io::read_f64(fs, eu) || !io::read_f64(fs, eh) ||
            !io::read_f64(fs, et) || !io::read_f64(fs, phi) || !io::read_f64(fs, psi) ||
            !io::read_f64(fs, ll) || !io::read_f64(fs, lp))
            break;
        std::vector<double> beta(beta_len);
        bool ok = true;
        for (auto& v : beta)
            if (!io::read_f64(fs, v)) {
                ok = false;
                break;
            }
        if (!ok) break;
        s.iterations.push_back(static_cast<std::int64_t>(iter));
        s.beta.insert(s.beta.end(), beta.begin(), beta.end());
        s.eta_usa.push_back(eu);
        s.eta_hyp.push_back(eh);
        s.eta_time.push_back(et);
        s.phi.push_back(phi);
        s.psi.push_back(psi);
        s.log_likelihood.push_back(ll);
        s.log_posterior.push_back(lp);
    }
    return s;
}

/// CSV export of a trace (one row per stored draw).
inline void export_trace_csv(const std::filesystem::path& path, const ChainSamples& s,
                             std::uint64_t config_hash) {
    auto out = io::open_output(path);
    out << io::hash_comment(config_hash);
    out << "iteration,eta_usa,eta_hyp,eta_time,phi,psi,log_likelihood,log_posterior";
    for (int j = 0; j < s.dim; ++j) out << ",beta_" << j;
    out << '\n';
    for (std::int64_t r = 0; r < s.stored(); ++r) {
        out << s.iterations[r] << ',' << io::format_double(s.eta_usa[r]) << ','
            << io::format_double(s.eta_hyp[r]) << ',' << io::format_double(s.eta_time[r]) << ','
            << io::format_double(s.phi[r]) << ',' << io::format_double(s.psi[r]) << ','
            << io::format_double(s.log_likelihood[r]) << ','
            << io::format_double(s.log_posterior[r]);
        for (int j = 0; j < s.dim; ++j) out << ',' << io::format_double(s.beta[r * s.dim + j]);
        out << '\n';
    }
}

} // namespace bayestomo
