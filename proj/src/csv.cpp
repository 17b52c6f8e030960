#include "diracsim/csv.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <sstream>

#include "diracsim/types.hpp"

namespace diracsim {

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const CsvMeta& meta, const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary), columns_(columns.size())
{
    if (!out_) throw Error("cannot open '" + path + "' for writing");
    out_ << "# diracsim " << meta.command << "\n";
    out_ << "# config_hash: " << meta.config_hash << "\n";
    out_ << "# seed: " << meta.seed << "\n";
    out_ << "# created: " << utc_now() << "\n";
    for (const auto& n : meta.notes) out_ << "# " << n << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
}

CsvWriter::~CsvWriter()
{
    try {
        close();
    } catch (...) {
    }
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_) throw ShapeError("csv row width does not match the header of " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row(cells);
}

void CsvWriter::footer(const std::string& key, const std::string& value) { footers_.push_back(key + ": " + value); }

void CsvWriter::footer(const std::string& key, double value) { footer(key, format_number(value)); }

void CsvWriter::close()
{
    if (!out_.is_open()) return;
    for (const auto& f : footers_) out_ << "# " << f << "\n";
    footers_.clear();
    out_.close();
    if (out_.fail()) throw Error("failed writing '" + path_ + "'");
}

std::size_t CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error("csv column '" + name + "' not found");
}

double CsvTable::number(std::size_t r, const std::string& name) const
{
    const std::string& s = rows.at(r).at(column(name));
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return std::stod(s);
}

std::string CsvTable::comment_value(const std::string& key) const
{
    const std::string prefix = key + ": ";
    for (const auto& c : comments)
        if (c.rfind(prefix, 0) == 0) return c.substr(prefix.size());
    return {};
}

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t p = 1;
            while (p < line.size() && line[p] == ' ') ++p;
            t.comments.push_back(line.substr(p));
            continue;
        }
        auto cells = split(line);
        if (!have_header) {
            t.header = cells;
            have_header = true;
        } else {
            if (cells.size() != t.header.size())
                throw Error("malformed csv '" + path + "': row width " + std::to_string(cells.size()) +
                            " differs from header width " + std::to_string(t.header.size()));
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw Error("csv '" + path + "' has no header");
    return t;
}

std::string csv_body(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line, body;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') body += line + "\n";
    return body;
}

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <class T>
void put(std::ofstream& o, T v)
{
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw Error("truncated snapshot");
    return v;
}

constexpr char magic[8] = {'D', 'S', 'F', 'I', 'E', 'L', 'D', '1'};

}  // namespace

void write_snapshot(const std::string& path, const Grid& g, const SystemState& Y, double t)
{
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error("cannot open '" + path + "' for writing");
    o.write(magic, 8);
    put<std::uint32_t>(o, static_cast<std::uint32_t>(g.dim()));
    put<std::uint32_t>(o, static_cast<std::uint32_t>(g.M()));
    put<std::uint32_t>(o, static_cast<std::uint32_t>(Y.psi.fields()));
    put<std::uint32_t>(o, static_cast<std::uint32_t>(Y.psi.spin()));
    put<double>(o, g.L());
    put<double>(o, t);
    for (const cd& v : Y.psi.data()) {
        put<double>(o, v.real());
        put<double>(o, v.imag());
    }
    for (int i = 0; i < g.dim(); ++i) put<double>(o, Y.q(i));
    for (int i = 0; i < g.dim(); ++i) put<double>(o, Y.p(i));
    if (!o) throw Error("failed writing '" + path + "'");
}

Snapshot read_snapshot(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    char m[8];
    in.read(m, 8);
    if (!in || std::memcmp(m, magic, 8) != 0) throw Error("'" + path + "' is not a field snapshot");
    Snapshot s;
    s.dim = static_cast<int>(get<std::uint32_t>(in));
    s.M = static_cast<int>(get<std::uint32_t>(in));
    const int fields = static_cast<int>(get<std::uint32_t>(in));
    const int spin = static_cast<int>(get<std::uint32_t>(in));
    s.L = get<double>(in);
    s.t = get<double>(in);
    std::size_t points = 1;
    for (int i = 0; i < s.dim; ++i) points *= static_cast<std::size_t>(s.M);
    s.state.psi = SpinorFieldSet(fields, spin, points);
    for (cd& v : s.state.psi.data()) {
        const double re = get<double>(in);
        const double im = get<double>(in);
        v = cd(re, im);
    }
    s.state.q.resize(s.dim);
    s.state.p.resize(s.dim);
    for (int i = 0; i < s.dim; ++i) s.state.q(i) = get<double>(in);
    for (int i = 0; i < s.dim; ++i) s.state.p(i) = get<double>(in);
    return s;
}

}  // namespace diracsim
