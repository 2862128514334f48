// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sdpm/io/csv.hpp"

namespace sdpm {

struct FcsHeader {
    std::string version;
    std::uint64_t text_begin = 0, text_end = 0;
    std::uint64_t data_begin = 0, data_end = 0;
    std::uint64_t analysis_begin = 0, analysis_end = 0;
    std::map<std::string, std::string> keywords;  ///< keys upper-cased

    const std::string& keyword(const std::string& key) const {
        const auto it = keywords.find(key);
        if (it == keywords.end()) throw CorruptFileError("FCS: required keyword " + key + " is missing");
        return it->second;
    }
    bool has(const std::string& key) const { return keywords.count(key) != 0; }
};

namespace detail {

inline std::uint64_t fcs_offset(std::string_view field, const char* what) {
    const auto t = trim(field);
    if (t.empty()) return 0;
    long long v = 0;
    if (!parse_long(t, v) || v < 0) throw CorruptFileError(std::string("FCS: malformed ") + what + " offset");
    return static_cast<std::uint64_t>(v);
}

inline std::uint64_t fcs_keyword_number(const FcsHeader& h, const std::string& key) {
    long long v = 0;
    if (!parse_long(trim(h.keyword(key)), v) || v < 0) throw CorruptFileError("FCS: keyword " + key + " is not a number");
    return static_cast<std::uint64_t>(v);
}

inline std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

/// Split a TEXT segment into keyword/value pairs. The first byte is the
/// delimiter; a doubled delimiter stands for one literal delimiter character.
inline std::map<std::string, std::string> parse_fcs_text(std::string_view text) {
    if (text.size() < 2) throw CorruptFileError("FCS: TEXT segment too short");
    const char delim = text.front();
    std::vector<std::string> tokens;
    std::string cur;
    std::size_t i = 1;
    bool closed = false;
    while (i < text.size()) {
        const char c = text[i];
        if (c == delim) {
            if (i + 1 < text.size() && text[i + 1] == delim) {
                cur.push_back(delim);
                i += 2;
                continue;
            }
            tokens.push_back(std::move(cur));
            cur.clear();
            closed = true;
            ++i;
            continue;
        }
        cur.push_back(c);
        closed = false;
        ++i;
    }
    if (!closed && !cur.empty()) tokens.push_back(std::move(cur));  // tolerate a missing final delimiter
    if (tokens.size() % 2 != 0) throw CorruptFileError("FCS: TEXT segment has an unpaired keyword");
    std::map<std::string, std::string> out;
    for (std::size_t k = 0; k < tokens.size(); k += 2) {
        if (tokens[k].empty()) throw CorruptFileError("FCS: empty keyword in TEXT segment");
        out[detail::upper(tokens[k])] = tokens[k + 1];
    }
    return out;
}

/// Header and TEXT segment of an in-memory FCS file.
inline FcsHeader parse_fcs_header(std::string_view bytes) {
    if (bytes.size() < 58) throw CorruptFileError("FCS: file shorter than the 58-byte header");
    FcsHeader h;
    h.version = std::string(bytes.substr(0, 6));
    if (h.version.rfind("FCS", 0) != 0) throw CorruptFileError("FCS: missing FCS signature");
    if (h.version != "FCS3.0" && h.version != "FCS3.1") {
        throw UnsupportedFeatureError("version", "only FCS3.0 and FCS3.1 are supported, found " + h.version);
    }
    h.text_begin = detail::fcs_offset(bytes.substr(10, 8), "TEXT begin");
    h.text_end = detail::fcs_offset(bytes.substr(18, 8), "TEXT end");
    h.data_begin = detail::fcs_offset(bytes.substr(26, 8), "DATA begin");
    h.data_end = detail::fcs_offset(bytes.substr(34, 8), "DATA end");
    h.analysis_begin = detail::fcs_offset(bytes.substr(42, 8), "ANALYSIS begin");
    h.analysis_end = detail::fcs_offset(bytes.substr(50, 8), "ANALYSIS end");
    if (h.text_begin < 58 || h.text_end < h.text_begin || h.text_end >= bytes.size()) {
        throw CorruptFileError("FCS: TEXT segment offsets out of range");
    }
    h.keywords = parse_fcs_text(bytes.substr(h.text_begin, h.text_end - h.text_begin + 1));
    if (h.data_begin == 0 && h.data_end == 0) {
        h.data_begin = detail::fcs_keyword_number(h, "$BEGINDATA");
        h.data_end = detail::fcs_keyword_number(h, "$ENDDATA");
    }
    return h;
}

/// List-mode float/double FCS3.0/3.1 data as a $TOT x $PAR matrix named by $PnN.
inline DataMatrix parse_fcs(std::string_view bytes) {
    const FcsHeader h = parse_fcs_header(bytes);
    const std::string mode = detail::upper(std::string(detail::trim(h.keyword("$MODE"))));
    if (mode != "L") throw UnsupportedFeatureError("$MODE", "only list mode (L) is supported, found " + mode);
    const std::string type = detail::upper(std::string(detail::trim(h.keyword("$DATATYPE"))));
    if (type != "F" && type != "D") {
        throw UnsupportedFeatureError("$DATATYPE", "only F and D data types are supported, found " + type);
    }
    const std::size_t width = type == "F" ? 4 : 8;
    const std::string byteord(detail::trim(h.keyword("$BYTEORD")));
    bool little = false;
    if (byteord == "1,2,3,4" || (width == 8 && byteord == "1,2,3,4,5,6,7,8")) {
        little = true;
    } else if (byteord == "4,3,2,1" || (width == 8 && byteord == "8,7,6,5,4,3,2,1")) {
        little = false;
    } else {
        throw UnsupportedFeatureError("$BYTEORD", "unsupported byte order " + byteord);
    }
    const std::uint64_t par = detail::fcs_keyword_number(h, "$PAR");
    const std::uint64_t tot = detail::fcs_keyword_number(h, "$TOT");
    if (par == 0 || tot == 0) throw CorruptFileError("FCS: $PAR and $TOT must be positive");
    if (par > (1u << 20) || tot > (std::uint64_t{1} << 40)) throw CorruptFileError("FCS: implausible $PAR or $TOT");
    std::vector<std::string> names;
    for (std::uint64_t p = 1; p <= par; ++p) {
        const std::string bkey = "$P" + std::to_string(p) + "B";
        const std::uint64_t bits = detail::fcs_keyword_number(h, bkey);
        if (bits != width * 8) {
            throw UnsupportedFeatureError("$PnB", bkey + " = " + std::to_string(bits) + " does not match $DATATYPE " + type);
        }
        names.push_back(h.keyword("$P" + std::to_string(p) + "N"));
    }

    const std::uint64_t need = par * tot * width;
    if (h.data_begin < 58 || h.data_end < h.data_begin || h.data_end >= bytes.size()) {
        throw CorruptFileError("FCS: DATA segment offsets out of range");
    }
    if (!(h.data_begin > h.text_end || h.data_end < h.text_begin)) throw CorruptFileError("FCS: DATA overlaps TEXT");
    if (h.data_end - h.data_begin + 1 < need) throw CorruptFileError("FCS: DATA segment shorter than $TOT x $PAR values");

    const bool native_little = std::endian::native == std::endian::little;
    Mat values(static_cast<Eigen::Index>(tot), static_cast<Eigen::Index>(par));
    const char* base = bytes.data() + h.data_begin;
    for (std::uint64_t e = 0; e < par * tot; ++e) {
        unsigned char buf[8];
        std::memcpy(buf, base + e * width, width);
        if (little != native_little) std::reverse(buf, buf + width);
        double v = 0.0;
        if (width == 4) {
            float f = 0.0f;
            std::memcpy(&f, buf, 4);
            v = f;
        } else {
            std::memcpy(&v, buf, 8);
        }
        if (!std::isfinite(v)) throw CorruptFileError("FCS: non-finite value in DATA segment");
        values(static_cast<Eigen::Index>(e / par), static_cast<Eigen::Index>(e % par)) = v;
    }
    return DataMatrix(std::move(values), std::move(names));
}

inline DataMatrix read_fcs(const std::string& path) { return parse_fcs(detail::read_file(path)); }

}  // namespace sdpm
