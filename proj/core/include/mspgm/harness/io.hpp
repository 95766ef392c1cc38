#pragma once

#include "mspgm/network.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mspgm::harness {

/// Writes `<base>.bin` (parameters as little-endian float64) and `<base>.txt` (layer sizes,
/// activation, parameter count and the fixed input/output transforms).
void write_network(const std::filesystem::path& base, const FeedForwardNet& net);
FeedForwardNet read_network(const std::filesystem::path& base);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws Error when absent.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mspgm::harness
