#include "flowmotion/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>

#include "flowmotion/errors.hpp"

namespace flowmotion {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

void put_f32_le(std::vector<uint8_t>& out, float value) {
    const uint32_t bits = std::bit_cast<uint32_t>(value);
    out.push_back(static_cast<uint8_t>(bits & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((bits >> 24) & 0xff));
}

float get_f32_le(const uint8_t* p) {
    const uint32_t bits = static_cast<uint32_t>(p[0]) |
                          (static_cast<uint32_t>(p[1]) << 8) |
                          (static_cast<uint32_t>(p[2]) << 16) |
                          (static_cast<uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

// Pulls the value following `'key':` out of the header dict. Tolerates
// numpy's whitespace variations and either quote style.
std::string dict_value(const std::string& header, const std::string& key) {
    for (char quote : {'\'', '"'}) {
        const std::string needle = quote + key + quote;
        size_t pos = header.find(needle);
        if (pos == std::string::npos) continue;
        pos += needle.size();
        while (pos < header.size() && (header[pos] == ':' || std::isspace(static_cast<unsigned char>(header[pos])))) {
            ++pos;
        }
        if (pos >= header.size()) break;
        if (header[pos] == '\'' || header[pos] == '"') {
            const char q = header[pos++];
            size_t end = header.find(q, pos);
            if (end == std::string::npos) break;
            return header.substr(pos, end - pos);
        }
        if (header[pos] == '(') {
            size_t end = header.find(')', pos);
            if (end == std::string::npos) break;
            return header.substr(pos, end - pos + 1);
        }
        size_t end = pos;
        while (end < header.size() && header[end] != ',' && header[end] != '}') ++end;
        std::string value = header.substr(pos, end - pos);
        while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
        return value;
    }
    throw FormatError("npy header missing key '" + key + "'");
}

std::vector<int64_t> parse_shape_tuple(const std::string& tuple) {
    if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')') {
        throw FormatError("npy header shape is not a tuple: " + tuple);
    }
    std::vector<int64_t> dims;
    int64_t current = 0;
    bool in_number = false;
    for (size_t i = 1; i + 1 < tuple.size(); ++i) {
        const char c = tuple[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            current = current * 10 + (c - '0');
            in_number = true;
        } else if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (in_number) {
                dims.push_back(current);
                current = 0;
                in_number = false;
            }
        } else {
            throw FormatError("npy header shape contains unexpected character");
        }
    }
    if (in_number) dims.push_back(current);
    return dims;
}

}  // namespace

FlowField read_npy(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
        throw FormatError("not an npy file: bad magic");
    }
    if (bytes[6] != 0x01 || bytes[7] != 0x00) {
        throw FormatError("unsupported npy format version " +
                          std::to_string(bytes[6]) + "." + std::to_string(bytes[7]));
    }
    const size_t header_len = static_cast<size_t>(bytes[8]) | (static_cast<size_t>(bytes[9]) << 8);
    if (bytes.size() < 10 + header_len) {
        throw FormatError("npy header truncated");
    }
    const std::string header(bytes.begin() + 10, bytes.begin() + 10 + header_len);

    const std::string descr = dict_value(header, "descr");
    if (descr != "<f4") {
        throw UnsupportedDtypeError("npy dtype '" + descr + "' is not little-endian f32");
    }
    const std::string fortran = dict_value(header, "fortran_order");
    if (fortran != "False") {
        throw FormatError("npy fortran_order must be False");
    }
    const std::vector<int64_t> shape = parse_shape_tuple(dict_value(header, "shape"));
    if (shape.size() != 3 || shape[2] != 2) {
        throw ShapeError("npy shape must be (H, W, 2)");
    }
    if (shape[0] <= 0 || shape[1] <= 0) {
        throw ShapeError("npy shape has a zero-sized dimension");
    }
    if (shape[0] > INT32_MAX || shape[1] > INT32_MAX) {
        throw ShapeError("npy shape exceeds supported size");
    }

    const size_t count = static_cast<size_t>(shape[0]) * static_cast<size_t>(shape[1]) * 2;
    const size_t payload = bytes.size() - 10 - header_len;
    if (payload != count * 4) {
        throw LengthError("npy payload is " + std::to_string(payload) + " bytes, expected " +
                          std::to_string(count * 4));
    }

    FlowField field(static_cast<int>(shape[1]), static_cast<int>(shape[0]));
    const uint8_t* p = bytes.data() + 10 + header_len;
    for (size_t i = 0; i < count; ++i) {
        field.data[i] = get_f32_le(p + i * 4);
    }
    field.validate();  // flow components must be finite
    return field;
}

std::vector<uint8_t> write_npy(const FlowField& field) {
    field.validate();

    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                       std::to_string(field.height) + ", " + std::to_string(field.width) +
                       ", 2), }";
    // Pad with spaces, newline-terminated, so (10 + len) is a multiple of 64.
    size_t total = 10 + dict.size() + 1;
    const size_t padded = (total + 63) / 64 * 64;
    dict.append(padded - total, ' ');
    dict.push_back('\n');

    std::vector<uint8_t> out;
    out.reserve(10 + dict.size() + field.data.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 6);
    out.push_back(0x01);
    out.push_back(0x00);
    out.push_back(static_cast<uint8_t>(dict.size() & 0xff));
    out.push_back(static_cast<uint8_t>((dict.size() >> 8) & 0xff));
    out.insert(out.end(), dict.begin(), dict.end());
    for (float value : field.data) {
        put_f32_le(out, value);
    }
    return out;
}

FlowField read_npy_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open npy file: " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_npy(bytes);
}

void write_npy_file(const std::string& path, const FlowField& field) {
    const std::vector<uint8_t> bytes = write_npy(field);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write npy file: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to npy file: " + path);
    }
}

}  // namespace flowmotion
