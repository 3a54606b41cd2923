#if DIC_HAVE_APP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include <app/app.hpp>
#include <dic/io.hpp>

namespace fs = std::filesystem;

namespace {

using Row = std::map<std::string, std::string>;

// rows of a report, skipping the "#" header block
std::vector<Row> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::vector<std::string> columns;
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');)
            cells.push_back(c);
        if (columns.empty()) {
            columns = cells;
            continue;
        }
        Row r;
        for (std::size_t i = 0; i < cells.size() && i < columns.size(); ++i)
            r[columns[i]] = cells[i];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string header_value(const fs::path& path, const std::string& key) {
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);)
        if (line.rfind("# " + key + ": ", 0) == 0)
            return line.substr(key.size() + 4);
    return {};
}

double num(const Row& r, const std::string& k) { return std::stod(r.at(k)); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::path(::testing::TempDir()) / "dic_cli_test";
        fs::remove_all(root_);
        ASSERT_EQ(run({"example", "--out", (root_ / "in").string()}), 0);
    }

    static int run(std::vector<std::string> args, std::string* stderr_text = nullptr) {
        args.insert(args.begin(), "dic");
        std::vector<const char*> argv;
        for (const auto& a : args)
            argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = dic::app::run(static_cast<int>(argv.size()), argv.data(), out, err);
        if (stderr_text)
            *stderr_text = err.str();
        return code;
    }

    static std::string in(const std::string& file) { return (root_ / "in" / file).string(); }
    static std::string out(const std::string& dir) { return (root_ / dir).string(); }

    static std::vector<std::string> model() {
        return {"--factors", in("factors.json"), "--copula", in("copula.json"), "--linkage", in("linkage.json"),
                "--curves", in("curves.json")};
    }

    static std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    }

    // a single 0-100% tranche with one date
    static std::string full_tranche() {
        const auto path = root_ / "in" / "full.json";
        dic::io::write_file(path.string(), R"([{"attach":0,"detach":1,"maturity":5}])");
        return path.string();
    }

    static fs::path root_;
};

fs::path Cli::root_;

} // namespace

TEST_F(Cli, ExampleWritesInputs) {
    for (const char* f : {"curves.json", "linkage.json", "factors.json", "copula.json", "supermix.json", "cdx.json",
                          "itx.json", "hy.json", "tranches.json", "targets_cdx.json"})
        EXPECT_TRUE(fs::exists(in(f))) << f;
}

TEST_F(Cli, CalibrateRoundTrip) {
    ASSERT_EQ(run({"calibrate", "--curves", in("curves.json"), "--linkage", in("linkage.json"), "--targets",
                   in("targets_cdx.json"), "--portfolio", in("cdx.json"), "--out", out("cal")}),
              0);
    const auto rows = read_csv(fs::path(out("cal")) / "calibration.csv");
    ASSERT_FALSE(rows.empty());
    double ss = 0.0;
    for (const auto& r : rows)
        ss += num(r, "error") * num(r, "error");
    EXPECT_LT(std::sqrt(ss / rows.size()), 1e-3);
    // the fitted laws load back as a factors file
    const auto laws = dic::io::parse_factors(dic::io::read_file(out("cal") + "/factors.json"));
    EXPECT_EQ(laws.size(), 1u);
    EXPECT_FALSE(header_value(fs::path(out("cal")) / "calibration.csv", "seed").empty());
}

TEST_F(Cli, CalibrateExitCodes) {
    auto targets = dic::io::parse_targets(dic::io::read_file(in("targets_cdx.json")));
    std::swap(targets.etl[0][0], targets.etl[0][1]);
    const auto crossed = (root_ / "in" / "crossed.json").string();
    dic::io::write_file(crossed, dic::io::dump_targets(targets));
    const std::vector<std::string> base = {"calibrate", "--curves", in("curves.json"), "--linkage", in("linkage.json"),
                                           "--portfolio", in("cdx.json"), "--out", out("cal_bad")};
    EXPECT_EQ(run(with(base, {"--targets", crossed})), 2);
    EXPECT_EQ(run(with(base, {"--targets", in("no_such_file.json")})), 1);
    EXPECT_EQ(run(with(base, {"--targets", in("targets_cdx.json"), "--max-iterations", "1"})), 3);
}

TEST_F(Cli, PriceFullTrancheIsExpectedLossAndRepeatable) {
    const auto args = with({"price", "--portfolio", in("cdx.json"), "--tranches", full_tranche(), "--paths", "4000"},
                           model());
    ASSERT_EQ(run(with(args, {"--out", out("price_a")})), 0);
    ASSERT_EQ(run(with(args, {"--out", out("price_b")})), 0);
    EXPECT_EQ(dic::io::read_file(out("price_a") + "/etl.csv"), dic::io::read_file(out("price_b") + "/etl.csv"));
    const auto portfolio = dic::io::parse_portfolio(dic::io::read_file(in("cdx.json")));
    const auto curves = dic::io::parse_curves(dic::io::read_file(in("curves.json")));
    const auto rows = read_csv(fs::path(out("price_a")) / "etl.csv");
    ASSERT_EQ(rows.size(), 20u);
    for (const auto& r : rows) {
        const double el = dic::portfolio_expected_loss(portfolio, curves, num(r, "t"));
        // 20 independent dates, so 3.5 sigma keeps the family-wise miss rate near 1%
        EXPECT_LT(std::abs(num(r, "etl") - el), 3.5 * num(r, "stderr") + 1e-9) << num(r, "t");
    }
}

TEST_F(Cli, PriceCorrelationSweepOrdering) {
    const auto tranche = (root_ / "in" / "eq_sr.json").string();
    dic::io::write_file(tranche, R"([{"attach":0,"detach":0.03,"maturity":5},{"attach":0.3,"detach":0.6,"maturity":5}])");
    ASSERT_EQ(run(with({"price", "--portfolio", in("supermix.json"), "--tranches", tranche, "--correlation",
                        "0,0.5,1", "--control-variate", "--paths", "10000", "--out", out("sweep")},
                       model())),
              0);
    std::map<std::pair<double, double>, double> at5; // (correlation, attach) -> etl
    for (const auto& r : read_csv(fs::path(out("sweep")) / "etl.csv"))
        if (num(r, "t") == 5.0)
            at5[{num(r, "correlation"), num(r, "attach")}] = num(r, "etl");
    ASSERT_EQ(at5.size(), 6u);
    auto etl = [&](double rho, double attach) { return at5.at(std::make_pair(rho, attach)); };
    EXPECT_GT(etl(0.0, 0.0), etl(0.5, 0.0));
    EXPECT_GT(etl(0.5, 0.0), etl(1.0, 0.0));
    EXPECT_LT(etl(0.0, 0.3), etl(0.5, 0.3));
    EXPECT_LT(etl(0.5, 0.3), etl(1.0, 0.3));
}

TEST_F(Cli, DeltasOnFullTrancheAreOne) {
    ASSERT_EQ(run(with({"deltas", "--portfolio", in("hy.json"), "--tranches", full_tranche(), "--paths", "20000",
                        "--out", out("deltas")},
                       model())),
              0);
    const auto rows = read_csv(fs::path(out("deltas")) / "deltas.csv");
    ASSERT_EQ(rows.size(), 100u);
    for (const auto& r : rows)
        EXPECT_LT(std::abs(num(r, "hedge_ratio") - 1.0), 3.0 * num(r, "stderr") + 1e-9) << r.at("issuer_id");
    const auto md = read_csv(fs::path(out("deltas")) / "model_delta.csv");
    ASSERT_EQ(md.size(), 1u);
    EXPECT_NEAR(num(md[0], "leverage"), 1.0, 1e-6);
}

TEST_F(Cli, QuantoAtZeroCorrelationIsZero) {
    ASSERT_EQ(run(with({"quanto", "--first", in("cdx.json"), "--second", in("itx.json"), "--tranches",
                        in("tranches.json"), "--correlation", "0", "--paths", "10000", "--out", out("quanto")},
                       model())),
              0);
    const auto rows = read_csv(fs::path(out("quanto")) / "quanto.csv");
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows)
        EXPECT_LT(std::abs(num(r, "adjustment")), 3.5 * num(r, "stderr") + 1e-12);
}

TEST_F(Cli, OracleCheckReportsAgreement) {
    const auto tranche = (root_ / "in" / "short.json").string();
    dic::io::write_file(tranche, R"([{"attach":0,"detach":0.1,"maturity":2},{"attach":0.1,"detach":1,"maturity":2}])");
    ASSERT_EQ(run(with({"oracle-check", "--portfolio", in("cdx.json"), "--tranches", tranche, "--paths", "20000",
                        "--oracle-paths", "20000", "--scenarios", "2", "--out", out("oracle")},
                       model())),
              0);
    const auto path = fs::path(out("oracle")) / "oracle.csv";
    const auto agreement = header_value(path, "agreement");
    const double z = std::stod(header_value(path, "max_abs_z"));
    EXPECT_EQ(agreement, z <= 3.0 ? "true" : "false");
    EXPECT_LT(z, 4.0);
    EXPECT_EQ(read_csv(fs::path(out("oracle")) / "scenarios.csv").empty(), false);
}

TEST_F(Cli, CacheDoesNotChangeOutputs) {
    const auto args = with({"price", "--portfolio", in("itx.json"), "--tranches", in("tranches.json"), "--paths",
                            "2000"},
                           model());
    ASSERT_EQ(run(with(args, {"--out", out("nocache")})), 0);
    const auto cache = out("cache_dir");
    ASSERT_EQ(run(with(args, {"--out", out("cold"), "--cache", cache})), 0);
    ASSERT_TRUE(fs::exists(fs::path(cache) / "linkage_cache.json"));
    ASSERT_EQ(run(with(args, {"--out", out("warm"), "--cache", cache})), 0);
    fs::remove_all(cache);
    ASSERT_EQ(run(with(args, {"--out", out("deleted"), "--cache", cache})), 0);
    const auto ref = dic::io::read_file(out("nocache") + "/etl.csv");
    for (const char* d : {"cold", "warm", "deleted"})
        EXPECT_EQ(dic::io::read_file(out(d) + "/etl.csv"), ref) << d;
}

TEST_F(Cli, InvalidInputs) {
    std::string err;
    EXPECT_EQ(run(with({"price", "--portfolio", in("factors.json"), "--tranches", in("tranches.json"), "--out",
                        out("bad")},
                       model()),
                  &err),
              4);
    EXPECT_FALSE(err.empty());
    EXPECT_NE(run({"price"}), 0);
}

#endif
