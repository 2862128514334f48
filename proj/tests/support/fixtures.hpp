// Apache License, Version 2.0, refer to LICENSE.txt

// Scratch directories, file helpers and a byte-level FCS builder shared by
// the test binaries.

#pragma once

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

namespace fixture {

namespace fs = std::filesystem;


inline fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("sdpm_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

// Byte-level FCS fixture builder, written from the file layout alone.
struct FcsFixture {
    std::string version = "FCS3.0";
    char delim = '/';
    std::vector<std::pair<std::string, std::string>> keywords;
    std::string data;
    bool offsets_in_header = true;

    std::string escape(const std::string& s) const {
        std::string out;
        for (char c : s) {
            out.push_back(c);
            if (c == delim) out.push_back(c);
        }
        return out;
    }

    std::string build() const {
        const std::size_t text_begin = 58;
        // Two passes so $BEGINDATA/$ENDDATA can carry their own final widths.
        std::string text;
        std::size_t data_begin = 0, data_end = 0;
        for (int pass = 0; pass < 2; ++pass) {
            text = std::string(1, delim);
            for (const auto& [k, v] : keywords) text += escape(k) + delim + escape(v) + delim;
            if (!offsets_in_header) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "$BEGINDATA%c%020zu%c$ENDDATA%c%020zu%c", delim, data_begin, delim, delim,
                              data_end, delim);
                text += buf;
            }
            data_begin = text_begin + text.size();
            data_end = data_begin + data.size() - 1;
        }
        char head[59];
        const std::size_t text_end = text_begin + text.size() - 1;
        if (offsets_in_header) {
            std::snprintf(head, sizeof head, "%-6s    %8zu%8zu%8zu%8zu%8d%8d", version.c_str(), text_begin, text_end,
                          data_begin, data_end, 0, 0);
        } else {
            std::snprintf(head, sizeof head, "%-6s    %8zu%8zu%8d%8d%8d%8d", version.c_str(), text_begin, text_end, 0, 0,
                          0, 0);
        }
        return std::string(head, 58) + text + data;
    }
};

template <class T>
std::string encode_values(const std::vector<double>& v, bool little) {
    std::string out;
    for (double x : v) {
        const T t = static_cast<T>(x);
        unsigned char b[sizeof(T)];
        std::memcpy(b, &t, sizeof(T));
        if ((std::endian::native == std::endian::little) != little) std::reverse(b, b + sizeof(T));
        out.append(reinterpret_cast<const char*>(b), sizeof(T));
    }
    return out;
}

inline FcsFixture list_mode_fixture(char type, bool little, const std::vector<double>& values, int par, int tot) {
    FcsFixture f;
    const int bits = type == 'F' ? 32 : 64;
    std::string order = little ? "1,2,3,4" : "4,3,2,1";
    if (bits == 64) order = little ? "1,2,3,4,5,6,7,8" : "8,7,6,5,4,3,2,1";
    f.keywords = {{"$BYTEORD", order}, {"$DATATYPE", std::string(1, type)}, {"$MODE", "L"},
                  {"$PAR", std::to_string(par)}, {"$TOT", std::to_string(tot)}, {"$NEXTDATA", "0"}};
    for (int p = 1; p <= par; ++p) {
        f.keywords.push_back({"$P" + std::to_string(p) + "B", std::to_string(bits)});
        f.keywords.push_back({"$P" + std::to_string(p) + "N", "M" + std::to_string(p)});
        f.keywords.push_back({"$P" + std::to_string(p) + "R", "262144"});
    }
    f.data = type == 'F' ? encode_values<float>(values, little) : encode_values<double>(values, little);
    return f;
}
}  // namespace fixture
