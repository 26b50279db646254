#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "hypertab/data.hpp"
#include "hypertab/error.hpp"
#include "hypertab/log.hpp"

using namespace hypertab;

TEST(Data, ParsesHeaderAndLastColumnLabel) {
    const auto ds = parse_csv("a,b,label\n1,2,yes\n3,4,no\n5,6,yes\n", LabelColumn::last());
    EXPECT_EQ(ds.x, (Matrix{{1, 2}, {3, 4}, {5, 6}}));
    EXPECT_EQ(ds.y, (Labels{0, 1, 0}));
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"yes", "no"}));
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
}

TEST(Data, LabelColumnByNameAndIndex) {
    const std::string text = "id,target,v\n1,x,0.5\n2,y,1.5\n";
    const auto by_name = parse_csv(text, LabelColumn::named("target"));
    const auto by_index = parse_csv(text, LabelColumn::at(1));
    EXPECT_EQ(by_name.x, (Matrix{{1, 0.5}, {2, 1.5}}));
    EXPECT_EQ(by_name.x, by_index.x);
    EXPECT_EQ(by_name.feature_names, (std::vector<std::string>{"id", "v"}));
    EXPECT_EQ(by_index.class_names, (std::vector<std::string>{"x", "y"}));
}

TEST(Data, NoneReadsEveryColumnAsAFeature) {
    const auto ds = parse_csv("a,b\n1,2\n3,4\n", LabelColumn::none());
    EXPECT_EQ(ds.x, (Matrix{{1, 2}, {3, 4}}));
    EXPECT_TRUE(ds.y.empty());
    EXPECT_TRUE(ds.class_names.empty());
    EXPECT_EQ(parse_csv("a\n1\n2\n", LabelColumn::none()).features(), 1u);
}

TEST(Data, LabelColumnParse) {
    EXPECT_FALSE(LabelColumn::parse("last").name.has_value());
    EXPECT_FALSE(LabelColumn::parse("last").index.has_value());
    EXPECT_TRUE(LabelColumn::parse("none").absent);
    EXPECT_EQ(LabelColumn::parse("3").index, std::optional<std::size_t>(3));
    EXPECT_EQ(LabelColumn::parse("diagnosis").name, std::optional<std::string>("diagnosis"));
}

TEST(Data, QuotedFieldsAndCrlf) {
    const auto ds = parse_csv("\"a,1\",label\r\n1.5,\"class \"\"A\"\"\"\r\n2.5,b\r\n", LabelColumn::last());
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a,1"}));
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"class \"A\"", "b"}));
    EXPECT_EQ(split_csv_record("x,\"y,z\",w"), (std::vector<std::string>{"x", "y,z", "w"}));
    EXPECT_EQ(quote_csv_field("plain"), "plain");
    EXPECT_EQ(quote_csv_field("a\"b"), "\"a\"\"b\"");
}

TEST(Data, HeaderlessFile) {
    const auto ds = parse_csv("1,2,a\n3,4,b\n", LabelColumn::last(), false);
    EXPECT_EQ(ds.samples(), 2u);
    EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"f0", "f1"}));
    EXPECT_THROW(parse_csv("1,2,a\n", LabelColumn::named("a"), false), DataError);
}

TEST(Data, MalformedInputReportsTheLine) {
    try {
        parse_csv("a,b,label\n1,2,x\n3,oops,y\n", LabelColumn::last());
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_csv("a,b,label\n1,2,x\n3,y\n", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("a,b,label\n1,,x\n", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("a,b,label\n1,nan,x\n", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("a,b,label\n1,2,\n", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("a,b\n", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("a\n1\n", LabelColumn::last()), DataError);
    EXPECT_THROW(parse_csv("a,b\n1,2\n", LabelColumn::named("zzz")), DataError);
    EXPECT_THROW(parse_csv("a,b\n1,2\n", LabelColumn::at(2)), DataError);
    EXPECT_THROW(parse_csv("a,b\n\"1,2\n", LabelColumn::last()), DataError);
}

TEST(Data, LoadCsvMissingFile) {
    EXPECT_THROW(load_csv("/nonexistent/file.csv", LabelColumn::last()), DataError);
}

TEST(Data, CsvRoundTrip) {
    const auto ds = parse_csv("a,b,label\n0.1,-2e-3,p\n1e10,3,q\n", LabelColumn::last());
    const auto back = parse_csv(to_csv(ds), LabelColumn::last());
    EXPECT_EQ(back.x, ds.x);
    EXPECT_EQ(back.y, ds.y);
    EXPECT_EQ(back.class_names, ds.class_names);
}

TEST(Data, SubsetSelectsRows) {
    const auto ds = parse_csv("a,label\n1,x\n2,y\n3,x\n", LabelColumn::last());
    const std::vector<std::size_t> rows{2, 0};
    const auto s = subset(ds, rows);
    EXPECT_EQ(s.x, (Matrix{{3}, {1}}));
    EXPECT_EQ(s.y, (Labels{0, 0}));
    EXPECT_EQ(s.class_names, ds.class_names);
    const std::vector<std::size_t> bad{3};
    EXPECT_THROW(subset(ds, bad), ContractError);
}

TEST(Data, Standardization) {
    const Matrix x{{1, 5}, {3, 5}, {5, 5}};
    const auto st = standardize_fit(x);
    EXPECT_EQ(st.mean, (Vector{3, 5}));
    EXPECT_NEAR(st.stddev[0], std::sqrt(8.0 / 3.0), 1e-15);
    EXPECT_EQ(st.stddev[1], 1.0);  // constant column
    const Matrix z = standardize_apply(x, st);
    EXPECT_NEAR(z(0, 0), -2.0 / std::sqrt(8.0 / 3.0), 1e-15);
    EXPECT_EQ(z(1, 0), 0.0);
    EXPECT_EQ(z(2, 1), 0.0);
    EXPECT_THROW(standardize_fit(Matrix(1, 2)), ContractError);
    EXPECT_THROW(standardize_apply(Matrix(2, 3), st), ContractError);
}

TEST(Data, StandardizeFitCounterCountsRows) {
    const auto before = standardize_fit_rows_seen();
    standardize_fit(Matrix(7, 2, 1.0));
    EXPECT_EQ(standardize_fit_rows_seen() - before, 7u);
}

TEST(Data, StratifiedKfoldBalancesClasses) {
    Labels y;
    for (int i = 0; i < 37; ++i) y.push_back(i % 3 == 0 ? 1 : 0);
    const auto plan = stratified_kfold(y, 5, 42);
    std::set<std::size_t> covered;
    std::vector<std::size_t> sizes;
    for (std::size_t f = 0; f < 5; ++f) {
        const auto test = plan.test_indices(f);
        const auto train = plan.train_indices(f);
        EXPECT_EQ(test.size() + train.size(), y.size());
        std::map<int, std::size_t> count;
        for (auto i : test) {
            EXPECT_TRUE(covered.insert(i).second) << "row in two test folds";
            ++count[y[i]];
        }
        sizes.push_back(test.size());
        EXPECT_GE(count[0], 4u);
        EXPECT_LE(count[0], 5u);
        EXPECT_GE(count[1], 2u);
        EXPECT_LE(count[1], 3u);
    }
    EXPECT_EQ(covered.size(), y.size());
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()), 1u);
    EXPECT_EQ(stratified_kfold(y, 5, 42).fold_of, plan.fold_of);
    EXPECT_NE(stratified_kfold(y, 5, 43).fold_of, plan.fold_of);
}

TEST(Data, StratifiedKfoldErrorsAndWarnings) {
    const Labels y{0, 0, 0, 1};
    EXPECT_THROW(stratified_kfold(y, 1, 0), ContractError);
    EXPECT_THROW(stratified_kfold(y, 5, 0), ContractError);
    std::vector<std::string> warnings;
    auto prev = set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
    stratified_kfold(y, 2, 0);
    set_warning_sink(prev);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Data, SyntheticDataset) {
    const auto s = make_synthetic(3);
    const auto& ds = s.data;
    EXPECT_EQ(ds.samples(), 50u);
    EXPECT_EQ(ds.features(), 50u);
    EXPECT_EQ(ds.classes(), 5u);
    std::map<int, int> counts;
    for (std::size_t i = 0; i < 50; ++i) {
        ++counts[ds.y[i]];
        EXPECT_EQ(ds.x(i, s.informative_column), ds.y[i] / 4.0);
        for (std::size_t j = 0; j < 50; ++j) {
            EXPECT_GE(ds.x(i, j), 0.0);
            EXPECT_LE(ds.x(i, j), 1.0);
        }
    }
    for (const auto& [cls, n] : counts) EXPECT_EQ(n, 10) << cls;
    EXPECT_EQ(make_synthetic(3).data.x, ds.x);
}

TEST(Data, ChecksumAndManifest) {
    const std::string text = "abc";
    const std::vector<unsigned char> bytes(text.begin(), text.end());
    EXPECT_EQ(fnv1a_hex(bytes), "e71fa2190541574b");
    EXPECT_EQ(fnv1a_hex(std::vector<unsigned char>{}), "cbf29ce484222325");

    const auto dir = std::filesystem::temp_directory_path() / "hypertab_data_test";
    std::filesystem::create_directories(dir);
    const auto ds = parse_csv("a,label\n1,x\n2,y\n", LabelColumn::last());
    save_csv(ds, dir / "d.csv");
    const auto m = describe_dataset("toy", dir / "d.csv", "label", ds);
    write_manifest(m, dir / "m.json");
    const auto back = read_manifest(dir / "m.json");
    EXPECT_EQ(back.name, "toy");
    EXPECT_EQ(back.samples, 2u);
    EXPECT_EQ(back.features, 1u);
    EXPECT_EQ(back.classes, 2u);
    EXPECT_EQ(back.checksum, file_checksum(dir / "d.csv"));
    std::filesystem::remove_all(dir);
}
