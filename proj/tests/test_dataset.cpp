#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rcf/csv.hpp"
#include "rcf/dataset.hpp"

using namespace rcf;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("rcf_test_" + tag);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace

TEST_CASE("toy SEM skeleton and labels at fixed noise") {
    const SemSpec sem = toy_sem();

    SUBCASE("all-zero noise gives the origin and label 0") {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(5);
        const auto d = sem.evaluate(z);
        CHECK(d.sample.cwiseAbs().maxCoeff() == 0.0);
        CHECK(d.skeleton.cwiseAbs().maxCoeff() == 0.0);
        CHECK(d.label == 0);
    }
    SUBCASE("noise (1,-1,0,0,0) reproduces the hand-computed chain") {
        Eigen::VectorXd u(5);
        u << 1, -1, 0, 0, 0;
        const auto d = sem.evaluate(u);
        CHECK(d.sample(2) == doctest::Approx(3.0));
        CHECK(d.sample(3) == doctest::Approx(-6.0));
        CHECK(d.sample(4) == doctest::Approx(std::sin(3.0)));
        CHECK(d.sample(4) == doctest::Approx(0.1411).epsilon(1e-3));
        // Roots observed exactly, so skeleton matches here.
        CHECK((d.skeleton - d.sample).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("nonlinear SEM skeleton at distribution means") {
    const SemSpec sem = nonlinear_sem();
    Eigen::VectorXd u(5);
    u << 2, 0, 0, 1, 0;
    const auto d = sem.evaluate(u);
    CHECK(d.skeleton(0) == doctest::Approx(2.0));
    CHECK(d.skeleton(1) == doctest::Approx(4.0));
    CHECK(d.skeleton(2) == doctest::Approx(std::sin(-4.0)));
    CHECK(d.skeleton(2) == doctest::Approx(0.7568).epsilon(1e-3));
    CHECK(d.skeleton(3) == doctest::Approx(1.0));
    CHECK(d.skeleton(4) == doctest::Approx(std::exp(1.5) + 2.0));
    CHECK(d.skeleton(4) == doctest::Approx(6.4817).epsilon(1e-3));
    // sin(X2) = sin(4) < 0 fails the all-five rule.
    CHECK(d.label == 0);
}

TEST_CASE("generated toy dataset statistics") {
    const Dataset data = generate_toy(20000, 7);
    REQUIRE(data.size() == 20000);
    REQUIRE(data.num_attributes() == 5);

    SUBCASE("splits follow 8:1:1") {
        CHECK(data.split.train.size() == 16000);
        CHECK(data.split.val.size() == 2000);
        CHECK(data.split.test.size() == 2000);
        std::vector<char> seen(20000, 0);
        for (const auto* part : {&data.split.train, &data.split.val, &data.split.test}) {
            for (int idx : *part) {
                CHECK(seen[std::size_t(idx)] == 0);
                seen[std::size_t(idx)] = 1;
            }
        }
    }
    SUBCASE("training columns are standardized") {
        const Matrix train = data.gather(data.split.train);
        for (Eigen::Index j = 0; j < 5; ++j) {
            const double m = train.col(j).mean();
            const double sd = std::sqrt(train.col(j).array().square().mean() - m * m);
            CHECK(std::abs(m) < 1e-9);
            CHECK(std::abs(sd - 1.0) < 1e-9);
        }
    }
    SUBCASE("X3/X4 relationship shows up in raw units") {
        const Eigen::VectorXd x3 = data.raw_features.col(2);
        const Eigen::VectorXd x4 = data.raw_features.col(3);
        CHECK(correlation(x3, x4) < -0.9);
        // OLS slope of X4 on X3.
        const Eigen::VectorXd c3 = x3.array() - x3.mean();
        const Eigen::VectorXd c4 = x4.array() - x4.mean();
        const double slope = c3.dot(c4) / c3.squaredNorm();
        CHECK(slope > -2.1);
        CHECK(slope < -1.9);
    }
    SUBCASE("both classes are represented with at least 5%") {
        const double pos =
            double(std::count(data.labels.begin(), data.labels.end(), 1)) / double(data.size());
        CHECK(pos >= 0.05);
        CHECK(pos <= 0.95);
    }
    SUBCASE("declared constraint is X3 vs X4 with negative sign") {
        REQUIRE(data.constraints.size() == 1);
        CHECK(data.constraints[0].attr_a == 2);
        CHECK(data.constraints[0].attr_b == 3);
        CHECK(data.constraints[0].sign == -1);
    }
}

TEST_CASE("generated nonlinear dataset statistics") {
    const Dataset data = generate_nonlinear(20000, 7);
    SUBCASE("all values finite after clamping") {
        CHECK(data.raw_features.allFinite());
        CHECK(data.features.allFinite());
    }
    SUBCASE("X4/X5 co-movement") {
        CHECK(correlation(data.raw_features.col(3), data.raw_features.col(4)) > 0.5);
    }
    SUBCASE("X1^2 tracks X2") {
        CHECK(correlation(data.raw_features.col(0).array().square(),
                          data.raw_features.col(1)) > 0.9);
    }
    SUBCASE("class balance is non-degenerate") {
        const double pos =
            double(std::count(data.labels.begin(), data.labels.end(), 1)) / double(data.size());
        CHECK(pos >= 0.05);
        CHECK(pos <= 0.95);
    }
}

TEST_CASE("same seed reproduces the dataset bit for bit") {
    const Dataset a = generate_toy(500, 123);
    const Dataset b = generate_toy(500, 123);
    CHECK(a.raw_features == b.raw_features);
    CHECK(a.labels == b.labels);
    CHECK(a.split.train == b.split.train);
    const Dataset c = generate_toy(500, 124);
    CHECK(a.raw_features != c.raw_features);
}

TEST_CASE("standardize/destandardize round trip") {
    const Dataset data = generate_toy(300, 9);
    SUBCASE("training mean maps to zero") {
        Matrix mean_row = data.standardizer.mean.transpose();
        const Matrix z = data.standardizer.transform(mean_row);
        CHECK(z.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("round trip is identity within 1e-10") {
        const Matrix raw = data.raw_features.topRows(50);
        const Matrix back = data.standardizer.inverse(data.standardizer.transform(raw));
        CHECK((back - raw).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("constant column is rejected by name") {
        Matrix raw(4, 2);
        raw << 1, 5, 2, 5, 3, 5, 4, 5;
        std::vector<int> rows = {0, 1, 2, 3};
        CHECK_THROWS_WITH_AS(fit_standardizer(raw, rows, {"a", "b"}),
                             doctest::Contains("'b'"), DataError);
    }
}

TEST_CASE("csv ingestion applies the missing-value policy") {
    TempDir tmp("csv");

    SUBCASE("zero-coded and empty cells drop rows") {
        write_file(tmp.path / "d.csv",
                   "Glucose,BMI,Outcome\n"
                   "120,31.5,1\n"
                   "0,28.0,0\n"
                   "140,25.0,0\n");
        CsvSchema schema;
        schema.features = {{"Glucose", true}, {"BMI", true}};
        schema.label_column = "Outcome";
        const Dataset d = ingest_csv((tmp.path / "d.csv").string(), schema, 1);
        CHECK(d.size() == 2);
        CHECK(d.raw_features(0, 0) == 120.0);
        CHECK(d.raw_features(1, 0) == 140.0);
    }
    SUBCASE("header-only file is an empty-dataset error") {
        write_file(tmp.path / "empty.csv", "Glucose,BMI,Outcome\n");
        CsvSchema schema;
        schema.features = {{"Glucose", true}, {"BMI", true}};
        schema.label_column = "Outcome";
        CHECK_THROWS_AS(ingest_csv((tmp.path / "empty.csv").string(), schema, 1), DataError);
    }
    SUBCASE("missing column is a schema error") {
        write_file(tmp.path / "m.csv", "Glucose,Outcome\n120,1\n");
        CsvSchema schema;
        schema.features = {{"Glucose", true}, {"BMI", true}};
        schema.label_column = "Outcome";
        CHECK_THROWS_AS(ingest_csv((tmp.path / "m.csv").string(), schema, 1), SchemaError);
    }
    SUBCASE("non-numeric cell outside the policy is a parse error") {
        write_file(tmp.path / "p.csv", "Glucose,BMI,Outcome\nabc,31.5,1\n");
        CsvSchema schema;
        schema.features = {{"Glucose", true}, {"BMI", true}};
        schema.label_column = "Outcome";
        CHECK_THROWS_AS(ingest_csv((tmp.path / "p.csv").string(), schema, 1), ParseError);
    }
    SUBCASE("leave-one-out marker sets full-train split") {
        write_file(tmp.path / "l.csv", "Glucose,BMI,Outcome\n120,31.5,1\n130,29,0\n141,22,1\n");
        CsvSchema schema;
        schema.features = {{"Glucose", false}, {"BMI", false}};
        schema.label_column = "Outcome";
        const Dataset d = ingest_csv((tmp.path / "l.csv").string(), schema, 1, true);
        CHECK(d.split.leave_one_out);
        CHECK(d.split.train.size() == 3);
        CHECK(d.split.test.empty());
    }
}

TEST_CASE("dataset save/load round trip is exact") {
    TempDir tmp("roundtrip");
    const Dataset a = generate_nonlinear(200, 31);
    save_dataset(a, tmp.path.string());
    const Dataset b = load_dataset(tmp.path.string());
    CHECK(a.raw_features == b.raw_features);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    CHECK(a.split.train == b.split.train);
    CHECK(a.split.val == b.split.val);
    CHECK(a.split.test == b.split.test);
    CHECK(a.standardizer.mean == b.standardizer.mean);
    CHECK(a.standardizer.stdev == b.standardizer.stdev);
    REQUIRE(b.constraints.size() == 2);
    CHECK(b.constraints[0].transform_a == RelationConstraint::Transform::square);
    CHECK(b.notes == a.notes);

    SUBCASE("saving twice yields identical bytes") {
        TempDir tmp2("roundtrip2");
        save_dataset(a, tmp2.path.string());
        CHECK(read_text_file((tmp.path / "dataset.csv").string()) ==
              read_text_file((tmp2.path / "dataset.csv").string()));
        CHECK(read_text_file((tmp.path / "dataset.meta.json").string()) ==
              read_text_file((tmp2.path / "dataset.meta.json").string()));
    }
}
