#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "tpk/spectral_solver.hpp"

namespace tpk {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File layout: 8-byte magic, uint64 header length, JSON header, then the values as
// little-endian (re, im) doubles in TPField order.
inline constexpr char field_magic[8] = {'T', 'P', 'K', 'F', 'L', 'D', '0', '1'};

struct StoredField {
    TPField field;
    GridSpec grid;
};

inline nlohmann::json field_header(const TPField& f, const GridSpec& g) {
    return {{"format", "tpk-field"},
            {"version", 1},
            {"n", f.n},
            {"n_t", f.n_t},
            {"n_x", f.n_x},
            {"T", g.period},
            {"L", g.box_edge},
            {"components", f.components},
            {"representation", to_string(f.representation)},
            {"dtype", "complex128-le"}};
}

inline void write_field(const std::string& path, const TPField& f, const GridSpec& g) {
    static_assert(std::endian::native == std::endian::little, "field I/O assumes a little-endian host");
    f.check(g, "write_field");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_field: cannot open " + path);
    std::string header = field_header(f, g).dump();
    std::uint64_t len = header.size();
    out.write(field_magic, sizeof field_magic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(cplx)));
    if (!out) throw IoError("write_field: write failed for " + path);
}

inline StoredField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_field: cannot open " + path);
    char magic[8];
    std::uint64_t len = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::string(magic, 8) != std::string(field_magic, 8)) throw IoError("read_field: not a field file: " + path);
    if (len > (1u << 20)) throw IoError("read_field: header too large");
    std::string header(len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(len));
    if (!in) throw IoError("read_field: truncated header");
    StoredField s;
    try {
        auto h = nlohmann::json::parse(header);
        if (h.at("format") != "tpk-field" || h.at("version") != 1 || h.at("dtype") != "complex128-le")
            throw IoError("read_field: unsupported header");
        s.grid = GridSpec{h.at("T").get<double>(), h.at("L").get<double>(), h.at("n_t").get<int>(), h.at("n_x").get<int>(),
                          h.at("n").get<int>()};
        std::string rep = h.at("representation");
        if (rep != "physical" && rep != "fourier") throw IoError("read_field: bad representation");
        s.field = TPField::zeros(s.grid, h.at("components").get<int>(),
                                 rep == "physical" ? Representation::physical : Representation::fourier);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("read_field: bad header: ") + e.what());
    } catch (const DomainError& e) {
        throw IoError(std::string("read_field: bad header: ") + e.what());
    }
    in.read(reinterpret_cast<char*>(s.field.values.data()),
            static_cast<std::streamsize>(s.field.values.size() * sizeof(cplx)));
    if (!in) throw IoError("read_field: truncated data");
    if (in.peek() != std::ifstream::traits_type::eof()) throw IoError("read_field: trailing bytes");
    return s;
}

}  // namespace tpk
