// Apache License, Version 2.0, refer to LICENSE.txt

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "sdpm/io/csv.hpp"
#include "sdpm/io/fcs.hpp"
#include "sdpm/io/results.hpp"
#include "sdpm/io/transform.hpp"
#include "support/fixtures.hpp"

using namespace sdpm;
namespace fs = std::filesystem;
using namespace fixture;

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, TwoByTwoWithNames) {
    const DataMatrix m = parse_csv("a,b\n1,2\n3,4\n");
    ASSERT_EQ(m.rows(), 2);
    ASSERT_EQ(m.cols(), 2);
    EXPECT_EQ(m.names(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(m.values()(0, 0), 1.0);
    EXPECT_EQ(m.values()(0, 1), 2.0);
    EXPECT_EQ(m.values()(1, 0), 3.0);
    EXPECT_EQ(m.values()(1, 1), 4.0);
}

TEST(Csv, NonNumericCellReportsLine) {
    try {
        parse_csv("a,b\n1,2\n1,x\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Csv, CrlfAndBomAccepted) {
    const DataMatrix m = parse_csv("\xEF\xBB\xBF" "a,b\r\n1.5,-2e3\r\n");
    EXPECT_EQ(m.names()[0], "a");
    EXPECT_EQ(m.values()(0, 1), -2000.0);
}

TEST(Csv, SingleRowIsValid) {
    const DataMatrix m = parse_csv("x,y,z\n1,2,3\n");
    EXPECT_EQ(m.rows(), 1);
    EXPECT_EQ(m.cols(), 3);
}

TEST(Csv, Errors) {
    EXPECT_THROW(parse_csv(""), ParseError);
    EXPECT_THROW(parse_csv("a,b\n"), ParseError);
    try {
        parse_csv("a,b\n1,2\n3\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_csv("a\nnan\n"), ParseError);
    EXPECT_THROW(parse_csv("a\ninf\n"), ParseError);
}

TEST(Csv, WriteReadRoundTripIsExact) {
    const auto dir = temp_dir("csv");
    Mat v(3, 2);
    v << 0.1, 1.0 / 3.0, -1e-300, 12345.678901234567, std::nextafter(1.0, 2.0), -0.0;
    write_csv(DataMatrix(v, {"p", "q"}), (dir / "d.csv").string());
    const DataMatrix back = read_csv((dir / "d.csv").string());
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) EXPECT_EQ(back.values()(i, j), v(i, j));
    fs::remove_all(dir);
}

TEST(Labels, PartitionCsvLayout) {
    const auto dir = temp_dir("labels");
    write_labels({1, 1, 2}, (dir / "p.csv").string());
    const std::string text = slurp(dir / "p.csv");
    const auto nl = text.find('\n');
    EXPECT_EQ(text.substr(nl + 1), "1,1\n2,1\n3,2\n");
    EXPECT_EQ(read_labels((dir / "p.csv").string()), (std::vector<int>{1, 1, 2}));
    EXPECT_EQ(parse_labels("label\n3\n1\n"), (std::vector<int>{3, 1}));
    EXPECT_THROW(parse_labels("obs,label\n2,1\n"), ParseError);
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// FCS

TEST(Fcs, Float32LittleEndian) {
    const auto bytes = list_mode_fixture('F', true, {1, 2, 3, 4, 5, 6}, 2, 3).build();
    const DataMatrix m = parse_fcs(bytes);
    ASSERT_EQ(m.rows(), 3);
    ASSERT_EQ(m.cols(), 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_EQ(m.values()(i, j), 2 * i + j + 1);
    EXPECT_EQ(m.names(), (std::vector<std::string>{"M1", "M2"}));
}

TEST(Fcs, AllTypesAndByteOrders) {
    const std::vector<double> vals = {0.5, -1.25, 1e6, 3.0, -7.75, 0.0, 1e-3, 42.0};
    for (char type : {'F', 'D'})
        for (bool little : {true, false}) {
            const DataMatrix m = parse_fcs(list_mode_fixture(type, little, vals, 4, 2).build());
            ASSERT_EQ(m.rows(), 2);
            ASSERT_EQ(m.cols(), 4);
            for (int e = 0; e < 8; ++e) {
                const double expect = type == 'F' ? double(float(vals[e])) : vals[e];
                EXPECT_EQ(m.values()(e / 4, e % 4), expect) << type << little << e;
            }
        }
}

TEST(Fcs, Version31AndDataOffsetsFromText) {
    auto f = list_mode_fixture('D', true, {1, 2, 3}, 1, 3);
    f.version = "FCS3.1";
    f.offsets_in_header = false;
    const DataMatrix m = parse_fcs(f.build());
    EXPECT_EQ(m.values()(2, 0), 3.0);
}

TEST(Fcs, DelimiterEscaping) {
    auto f = list_mode_fixture('F', true, {1, 2}, 1, 2);
    f.keywords.push_back({"$FIL", "a/b"});  // escaped to "a//b" on disk
    const std::string bytes = f.build();
    EXPECT_NE(bytes.find("/$FIL/a//b/"), std::string::npos);
    const FcsHeader h = parse_fcs_header(bytes);
    EXPECT_EQ(h.keyword("$FIL"), "a/b");

    const auto kw = parse_fcs_text("|K1|x||y|K2|a|||");
    EXPECT_EQ(kw.at("K1"), "x|y");
    EXPECT_EQ(kw.at("K2"), "a|");
}

TEST(Fcs, UnsupportedFeaturesNameTheKeyword) {
    auto expect_keyword = [](const FcsFixture& f, const std::string& key) {
        try {
            parse_fcs(f.build());
            ADD_FAILURE() << "expected UnsupportedFeatureError for " << key;
        } catch (const UnsupportedFeatureError& e) {
            EXPECT_EQ(e.keyword(), key);
        }
    };
    auto f = list_mode_fixture('F', true, {1, 2}, 1, 2);
    for (auto& [k, v] : f.keywords)
        if (k == "$DATATYPE") v = "I";
    expect_keyword(f, "$DATATYPE");

    f = list_mode_fixture('F', true, {1, 2}, 1, 2);
    for (auto& [k, v] : f.keywords)
        if (k == "$MODE") v = "C";
    expect_keyword(f, "$MODE");

    f = list_mode_fixture('F', true, {1, 2}, 1, 2);
    for (auto& [k, v] : f.keywords)
        if (k == "$BYTEORD") v = "3,4,1,2";
    expect_keyword(f, "$BYTEORD");

    f = list_mode_fixture('F', true, {1, 2}, 1, 2);
    for (auto& [k, v] : f.keywords)
        if (k == "$P1B") v = "16";
    expect_keyword(f, "$PnB");

    f = list_mode_fixture('F', true, {1, 2}, 1, 2);
    f.version = "FCS2.0";
    expect_keyword(f, "version");
}

TEST(Fcs, CorruptOffsets) {
    auto bytes = list_mode_fixture('F', true, {1, 2, 3, 4}, 2, 2).build();
    std::string bad = bytes;
    bad.replace(34, 8, "   99999");  // DATA end past the file
    EXPECT_THROW(parse_fcs(bad), CorruptFileError);
    bad = bytes;
    bad.replace(26, 8, "      60");  // DATA begins inside TEXT
    EXPECT_THROW(parse_fcs(bad), CorruptFileError);
    bad = bytes;
    bad.replace(10, 8, "      1x");
    EXPECT_THROW(parse_fcs(bad), CorruptFileError);
    EXPECT_THROW(parse_fcs("NOTFCS" + std::string(60, ' ')), CorruptFileError);
}

TEST(Fcs, TruncationsGiveTypedErrors) {
    for (char type : {'F', 'D'}) {
        const auto bytes = list_mode_fixture(type, type == 'F', {1, 2, 3, 4, 5, 6}, 2, 3).build();
        for (std::size_t len = 0; len < bytes.size(); ++len) {
            EXPECT_THROW(parse_fcs(std::string_view(bytes).substr(0, len)), FormatError) << "length " << len;
        }
    }
}

TEST(Fcs, ByteFlipsNeverEscapeTheErrorHierarchy) {
    const auto bytes = list_mode_fixture('F', true, {1, 2, 3, 4, 5, 6}, 2, 3).build();
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
    std::uniform_int_distribution<int> val(0, 255);
    for (int trial = 0; trial < 3000; ++trial) {
        std::string b = bytes;
        const int flips = 1 + trial % 4;
        for (int k = 0; k < flips; ++k) b[pos(gen)] = static_cast<char>(val(gen));
        try {
            const DataMatrix m = parse_fcs(b);
            EXPECT_TRUE(m.values().allFinite());
        } catch (const FormatError&) {
        } catch (const std::exception& e) {
            ADD_FAILURE() << "untyped error: " << e.what();
        }
    }
}

TEST(Fcs, ReadFromDisk) {
    const auto dir = temp_dir("fcs");
    spit(dir / "x.fcs", list_mode_fixture('F', false, {1, 2, 3, 4, 5, 6}, 2, 3).build());
    EXPECT_EQ(read_fcs((dir / "x.fcs").string()).values()(2, 1), 6.0);
    fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// transforms

TEST(Transform, Examples) {
    for (double c : {1.0, 5.0, 150.0}) EXPECT_EQ(TransformSpec::arcsinh(c).apply(0.0), 0.0);
    for (double x : {0.0, 0.5, 3.0, 100.0}) EXPECT_DOUBLE_EQ(TransformSpec::box_cox(1.0).apply(x), x - 1.0);
    EXPECT_DOUBLE_EQ(TransformSpec::box_cox(0.0).apply(std::exp(1.0)), 1.0);
    EXPECT_DOUBLE_EQ(TransformSpec::arcsinh(150.0).apply(150.0), std::asinh(1.0));
}

TEST(Transform, DomainErrors) {
    EXPECT_THROW(TransformSpec::box_cox(0.0).apply(0.0), ArgumentError);
    EXPECT_THROW(TransformSpec::box_cox(-0.5).apply(-1.0), ArgumentError);
    EXPECT_THROW(TransformSpec::box_cox(0.5).apply(-1.0), ArgumentError);
    EXPECT_THROW(TransformSpec::arcsinh(0.0), ConfigError);
    Mat v(2, 1);
    v << 1.0, -2.0;
    EXPECT_THROW(transform(DataMatrix(v), TransformSpec::box_cox(0.0)), ArgumentError);
}

TEST(Transform, ParseAndInverse) {
    EXPECT_EQ(TransformSpec::parse("none").kind, TransformSpec::Kind::none);
    EXPECT_EQ(TransformSpec::parse("arcsinh").param, 150.0);
    EXPECT_EQ(TransformSpec::parse("arcsinh:5").param, 5.0);
    EXPECT_EQ(TransformSpec::parse("boxcox:0.25").kind, TransformSpec::Kind::box_cox);
    EXPECT_THROW(TransformSpec::parse("logicle"), ConfigError);
    EXPECT_THROW(TransformSpec::parse("boxcox"), ConfigError);
    Mat v(2, 2);
    v << 0.5, 10.0, 250.0, 3.0;
    for (const auto& s : {TransformSpec::arcsinh(150.0), TransformSpec::box_cox(0.0), TransformSpec::box_cox(0.3)}) {
        const DataMatrix back = inverse_transform(transform(DataMatrix(v), s), s);
        EXPECT_LT((back.values() - v).cwiseAbs().maxCoeff(), 1e-10) << s.to_string();
        EXPECT_EQ(TransformSpec::parse(s.to_string()).param, s.param);
    }
}

// ---------------------------------------------------------------------------
// results

namespace {

ResultBundle sample_bundle() {
    ResultBundle b;
    b.partition = Partition({1, 1, 2, 3});
    SimilarityMatrix z(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) z.at(i, j) = i == j ? 1.0 : 1.0 / double(3 + i + j);
    b.similarity = z;
    b.k_trace = {3, 4, 3};
    b.alpha_trace = {0.1, 1.0 / 7.0, 2.5e-5};
    b.logdensity_trace = {-100.25, -99.0 / 7.0, -98.5};
    b.acceptance_rate = 0.3141592653589793;
    b.seed = 123456789012345ULL;
    b.config_hash = "00000000deadbeef";
    b.mode = "st";
    b.extra["note"] = "x";
    PosteriorDraws d;
    d.partitions = {{1, 1, 2, 2}, {1, 2, 2, 3}, {1, 1, 1, 2}};
    for (const auto& p : d.partitions) {
        d.cluster_params.emplace_back();
        const int k = *std::max_element(p.begin(), p.end());
        for (int c = 0; c < k; ++c) {
            Vec xi(2), psi(2);
            xi << c + 0.1, -c / 3.0;
            psi << 0.7, -1.0 / 9.0;
            Mat s(2, 2);
            s << 1.5, 0.2, 0.2, 0.9 + c;
            d.cluster_params.back().emplace_back(xi, psi, SpdMatrix(s), 4.0 + c / 7.0);
        }
    }
    b.draws = d;
    return b;
}

}  // namespace

TEST(Results, RoundTripIsBitExact) {
    const auto dir = temp_dir("results");
    const ResultBundle b = sample_bundle();
    write_results(b, dir.string());
    const ResultBundle r = read_results(dir.string());
    EXPECT_EQ(r.partition.labels(), b.partition.labels());
    ASSERT_TRUE(r.similarity.has_value());
    EXPECT_EQ(r.similarity->values(), b.similarity->values());
    EXPECT_EQ(r.k_trace, b.k_trace);
    EXPECT_EQ(r.alpha_trace, b.alpha_trace);
    EXPECT_EQ(r.logdensity_trace, b.logdensity_trace);
    EXPECT_EQ(r.acceptance_rate, b.acceptance_rate);
    EXPECT_EQ(r.seed, b.seed);
    EXPECT_EQ(r.config_hash, b.config_hash);
    EXPECT_EQ(r.extra, b.extra);
    ASSERT_TRUE(r.draws.has_value());
    EXPECT_EQ(r.draws->partitions, b.draws->partitions);
    for (std::size_t t = 0; t < b.draws->size(); ++t) {
        ASSERT_EQ(r.draws->cluster_params[t].size(), b.draws->cluster_params[t].size());
        for (std::size_t k = 0; k < b.draws->cluster_params[t].size(); ++k) {
            const auto& x = r.draws->cluster_params[t][k];
            const auto& y = b.draws->cluster_params[t][k];
            EXPECT_EQ(x.nu, y.nu);
            EXPECT_EQ(x.xi, y.xi);
            EXPECT_EQ(x.psi, y.psi);
            EXPECT_EQ(x.sigma.matrix(), y.sigma.matrix());
        }
    }
    // Writing again reproduces the same bytes.
    const auto dir2 = temp_dir("results2");
    write_results(r, dir2.string());
    for (const char* f : {"partition.csv", "traces.csv", "similarity.bin", "draws_partitions.csv", "draws_clusters.csv"})
        EXPECT_EQ(slurp(dir / f), slurp(dir2 / f)) << f;
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST(Results, SimilarityLayout) {
    SimilarityMatrix z(2, {1.0, 0.25, 0.25, 1.0});
    const std::string bytes = encode_similarity(z);
    ASSERT_EQ(bytes.size(), 4u + 8u + 4u * 8u + 8u);
    EXPECT_EQ(bytes.substr(0, 4), "ZETA");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
    for (int k = 5; k < 12; ++k) EXPECT_EQ(bytes[k], 0);
    // FNV-1a 64 reference computed byte by byte.
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < bytes.size() - 8; ++i) {
        h ^= static_cast<unsigned char>(bytes[i]);
        h *= 1099511628211ULL;
    }
    std::uint64_t stored = 0;
    for (int k = 7; k >= 0; --k) stored = (stored << 8) | static_cast<unsigned char>(bytes[bytes.size() - 8 + k]);
    EXPECT_EQ(stored, h);
    EXPECT_EQ(decode_similarity(bytes).values(), z.values());
}

TEST(Results, CorruptionIsDetected) {
    const auto dir = temp_dir("corrupt");
    write_results(sample_bundle(), dir.string());
    std::string bin = slurp(dir / "similarity.bin");
    for (std::size_t pos : {std::size_t{20}, bin.size() - 1, std::size_t{4}}) {
        std::string bad = bin;
        bad[pos] = static_cast<char>(bad[pos] ^ 0x01);
        spit(dir / "similarity.bin", bad);
        EXPECT_THROW(read_results(dir.string()), CorruptResultsError) << pos;
    }
    spit(dir / "similarity.bin", bin.substr(0, bin.size() - 3));
    EXPECT_THROW(read_results(dir.string()), CorruptResultsError);
    spit(dir / "similarity.bin", bin);
    EXPECT_NO_THROW(read_results(dir.string()));
    spit(dir / "metadata.json", "{not json");
    EXPECT_THROW(read_results(dir.string()), CorruptResultsError);
    fs::remove_all(dir);
    EXPECT_THROW(read_results(dir.string()), ArgumentError);
}
