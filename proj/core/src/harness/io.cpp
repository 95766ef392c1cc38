#include "mspgm/harness/io.hpp"

#include "mspgm/error.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace mspgm::harness {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
    return std::filesystem::path(base.string() + suffix);
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
    return out;
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    for (std::string item; in >> item;) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size()) throw Error("network sidecar: bad number " + item);
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_double failed");
    return std::string(buf, ptr);
}

void write_network(const std::filesystem::path& base, const FeedForwardNet& net) {
    std::ofstream bin(with_suffix(base, ".bin"), std::ios::binary);
    if (!bin) throw Error("cannot write " + with_suffix(base, ".bin").string());
    for (double v : net.params()) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        char bytes[8];
        std::memcpy(bytes, &bits, 8);
        bin.write(bytes, 8);
    }

    std::ostringstream txt;
    txt << "layer_sizes =";
    for (int k : net.layer_sizes()) txt << ' ' << k;
    txt << "\nactivation = " << to_string(net.arch().activation) << "\nparams = " << net.params().size()
        << "\nformat = float64 little-endian, (W_1, b_1, ..., W_l, b_l), W row-major\n";
    if (!net.input_shift().empty()) {
        txt << "input_shift = " << join(net.input_shift()) << "\ninput_scale = " << join(net.input_scale()) << "\n";
    }
    if (!net.output_shift().empty()) {
        txt << "output_shift = " << join(net.output_shift()) << "\noutput_scale = " << join(net.output_scale())
            << "\n";
    }
    write_text(with_suffix(base, ".txt"), txt.str());
}

FeedForwardNet read_network(const std::filesystem::path& base) {
    std::map<std::string, std::string> fields;
    std::istringstream in(read_text(with_suffix(base, ".txt")));
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        fields[key] = line.substr(eq + 1);
    }
    if (!fields.count("layer_sizes") || !fields.count("activation")) throw Error("network sidecar: missing fields");
    NetArch arch;
    for (double v : parse_numbers(fields["layer_sizes"])) arch.layer_sizes.push_back(static_cast<int>(v));
    std::string act = fields["activation"];
    act.erase(0, act.find_first_not_of(' '));
    arch.activation = activation_from_string(act);
    FeedForwardNet net = FeedForwardNet::zeros(arch);

    std::ifstream bin(with_suffix(base, ".bin"), std::ios::binary);
    if (!bin) throw Error("cannot read " + with_suffix(base, ".bin").string());
    std::vector<double> params(net.params().size());
    for (double& v : params) {
        char bytes[8];
        if (!bin.read(bytes, 8)) throw Error("network file shorter than the sidecar describes");
        std::uint64_t bits = 0;
        std::memcpy(&bits, bytes, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        v = std::bit_cast<double>(bits);
    }
    if (bin.peek() != std::char_traits<char>::eof()) throw Error("network file longer than the sidecar describes");
    net.set_params(params);
    if (fields.count("input_shift")) {
        net.set_input_transform(parse_numbers(fields["input_shift"]), parse_numbers(fields["input_scale"]));
    }
    if (fields.count("output_shift")) {
        net.set_output_transform(parse_numbers(fields["output_shift"]), parse_numbers(fields["output_scale"]));
    }
    return net;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw Error("csv: missing column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    CsvTable table;
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) throw Error("csv: empty file " + path.string());
    table.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != table.header.size()) throw Error("csv: ragged row in " + path.string());
        table.rows.push_back(std::move(cells));
    }
    return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ostringstream out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) emit(row);
    write_text(path, out.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace mspgm::harness
