#pragma once
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "diracsim/fields.hpp"
#include "diracsim/grid.hpp"

namespace diracsim {

// Shortest round-trip decimal form ("%.17g"), independent of locale.
std::string format_number(double v);

struct CsvMeta {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    // Extra "key: value" comment lines written after the standard ones.
    std::vector<std::string> notes;
};

// Comma-separated, '#' comments. The header comments carry the command, config
// hash, seed and a creation time; everything else is deterministic.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const CsvMeta& meta, const std::vector<std::string>& columns);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<std::string>& cells);
    void row(const std::vector<double>& values);
    // Trailing "# key: value" line.
    void footer(const std::string& key, const std::string& value);
    void footer(const std::string& key, double value);
    void close();
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t columns_;
    std::vector<std::string> footers_;
};

struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a column; throws Error when absent.
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    // Value of a "# key: value" comment, empty when absent.
    std::string comment_value(const std::string& key) const;
};

CsvTable read_csv(const std::string& path);

// Non-comment lines of a CSV file, joined with '\n'.
std::string csv_body(const std::string& path);

// Field snapshot: 8-byte magic "DSFIELD1", then little-endian
// uint32 dim, M, fields, spin; double L, t; then fields*spin*M^d complex doubles
// (re, im) in component-major order, then q and p (dim doubles each).
void write_snapshot(const std::string& path, const Grid& g, const SystemState& Y, double t);

struct Snapshot {
    int dim = 0;
    int M = 0;
    double L = 0.0;
    double t = 0.0;
    SystemState state;
};

Snapshot read_snapshot(const std::string& path);

}  // namespace diracsim
