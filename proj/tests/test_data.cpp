#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rlvc/data.hpp"
#include "rlvc/errors.hpp"

using namespace rlvc;
using namespace rlvc::data;
using rlvc::test::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << s;
}

bool same(const ZslDataset& a, const ZslDataset& b) {
    return a.features == b.features && a.labels == b.labels && a.splits == b.splits && a.roles == b.roles &&
           a.prototypes == b.prototypes;
}

}  // namespace

TEST_CASE("loader round trip on a hand-written fixture") {
    TempDir dir("ds");
    const auto ds = rlvc::test::tiny_dataset();
    ds.validate();
    save_dataset(ds, dir.path());
    CHECK(slurp(dir / "classes.csv") == "0,seen\n1,seen\n2,unseen\n");
    CHECK(slurp(dir / "labels.csv").substr(0, 16) == "0,train\n0,train\n");
    const auto back = load_dataset(dir.path());
    CHECK(same(ds, back));
    CHECK(back.seen_classes() == std::vector<int>{0, 1});
    CHECK(back.unseen_classes() == std::vector<int>{2});
    CHECK(back.rows(Split::Train) == std::vector<int>{0, 1, 2});
    CHECK(back.rows(Split::TestUnseen) == std::vector<int>{4});
}

TEST_CASE("validation rejects broken invariants") {
    auto check_bad = [](auto mutate) {
        auto ds = rlvc::test::tiny_dataset();
        mutate(ds);
        CHECK_THROWS_AS(ds.validate(), ConfigError);
    };
    check_bad([](ZslDataset& d) { d.labels.pop_back(); });
    check_bad([](ZslDataset& d) { d.labels[0] = 7; });
    check_bad([](ZslDataset& d) { d.labels[0] = 2; });                             // train row of unseen class
    check_bad([](ZslDataset& d) { d.splits[4] = Split::TestSeen; });              // test_seen of unseen class
    check_bad([](ZslDataset& d) { d.labels[4] = 0; });                             // test_unseen of seen class
    check_bad([](ZslDataset& d) { d.prototypes.conservativeResize(2, 2); });
    check_bad([](ZslDataset& d) { d.features(1, 1) = std::numeric_limits<double>::quiet_NaN(); });
    check_bad([](ZslDataset& d) { d.prototypes(0, 0) = std::numeric_limits<double>::infinity(); });
}

TEST_CASE("loader rejects malformed files") {
    TempDir dir("bad");
    save_dataset(rlvc::test::tiny_dataset(), dir.path());
    const auto good_features = slurp(dir / "features.csv");
    const auto good_labels = slurp(dir / "labels.csv");
    const auto good_classes = slurp(dir / "classes.csv");

    spit(dir / "features.csv", "1,2,3\n1,2\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), ConfigError);
    spit(dir / "features.csv", "1,2,x\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), ConfigError);
    spit(dir / "features.csv", good_features);

    spit(dir / "labels.csv", good_labels + "0,train\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), ConfigError);
    spit(dir / "labels.csv", "0,bogus\n" + good_labels.substr(good_labels.find('\n') + 1));
    CHECK_THROWS_AS(load_dataset(dir.path()), ConfigError);
    spit(dir / "labels.csv", good_labels);

    spit(dir / "classes.csv", "0,seen\n2,seen\n1,unseen\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), ConfigError);
    spit(dir / "classes.csv", "0,seen\n1,seen\n2,maybe\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), ConfigError);
    spit(dir / "classes.csv", good_classes);

    std::filesystem::remove(dir / "prototypes.csv");
    CHECK_THROWS_AS(load_dataset(dir.path()), IoError);
    CHECK_THROWS_AS(load_dataset(dir / "nope"), IoError);
}

TEST_CASE("single-byte mutations never escape the error types") {
    TempDir dir("mut");
    const auto ds = rlvc::test::tiny_dataset();
    save_dataset(ds, dir.path());
    Rng rng(13);
    const char alphabet[] = "0123456789,.-e\nx ";
    std::uniform_int_distribution<int> ua(0, static_cast<int>(sizeof alphabet) - 2);
    int rejected = 0, accepted = 0;
    for (const char* name : {"features.csv", "labels.csv", "prototypes.csv", "classes.csv"}) {
        const auto original = slurp(dir / name);
        std::uniform_int_distribution<std::size_t> upos(0, original.size() - 1);
        for (int trial = 0; trial < 60; ++trial) {
            std::string mutated = original;
            mutated[upos(rng)] = alphabet[ua(rng)];
            spit(dir / name, mutated);
            try {
                const auto back = load_dataset(dir.path());
                back.validate();
                ++accepted;
            } catch (const ConfigError&) {
                ++rejected;
            } catch (const IoError&) {
                ++rejected;
            }
        }
        spit(dir / name, original);
    }
    CHECK(rejected > 0);
    CHECK(rejected + accepted == 240);
}

TEST_CASE("synthetic split sizes") {
    SyntheticSpec s;
    s.n_seen = 20;
    s.n_unseen = 5;
    s.samples_per_class = 40;
    s.test_fraction = 0.2;
    const auto ds = make_synthetic(s);
    CHECK(ds.rows(Split::Train).size() == 20u * 40 * 8 / 10);
    CHECK(ds.rows(Split::TestSeen).size() == 20u * 8);
    CHECK(ds.rows(Split::TestUnseen).size() == 5u * 40);
    CHECK(ds.seen_classes().size() == 20u);
    CHECK(ds.unseen_classes().size() == 5u);
    CHECK(ds.semantic_dim() == 16);
}

TEST_CASE("synthetic means respect the separation") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SyntheticSpec s;
        s.seed = seed;
        const auto syn = make_synthetic_with_means(s);
        const auto& m = syn.class_means;
        for (Eigen::Index a = 0; a < m.rows(); ++a)
            for (Eigen::Index b = a + 1; b < m.rows(); ++b) CHECK((m.row(a) - m.row(b)).norm() >= s.visual_separation);
    }
}

TEST_CASE("every unseen class has a seen sibling with a nearby prototype") {
    SyntheticSpec s;
    const auto ds = make_synthetic(s);
    for (int u : ds.unseen_classes()) {
        double best = 1e300;
        for (int c : ds.seen_classes()) best = std::min(best, (ds.prototypes.row(u) - ds.prototypes.row(c)).norm());
        CHECK(best <= 2.0 * s.semantic_jitter + 1e-12);
    }
}

TEST_CASE("zero jitter makes cluster siblings share a prototype") {
    SyntheticSpec s;
    s.semantic_jitter = 0.0;
    const auto ds = make_synthetic(s);
    for (int c = 0; c < ds.num_classes(); ++c) {
        const int first = (c / s.semantic_cluster_size) * s.semantic_cluster_size;
        CHECK(ds.prototypes.row(c) == ds.prototypes.row(first));
    }
}

TEST_CASE("empirical class means converge to the generating means") {
    SyntheticSpec s;
    s.samples_per_class = 2000;
    const auto syn = make_synthetic_with_means(s);
    const auto& ds = syn.dataset;
    for (int c = 0; c < ds.num_classes(); ++c) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(ds.feature_dim());
        int n = 0;
        for (int i = 0; i < ds.num_samples(); ++i)
            if (ds.labels[static_cast<std::size_t>(i)] == c) {
                sum += ds.features.row(i);
                ++n;
            }
        // per-coordinate sd of the mean is sigma / sqrt(n) ~ 0.022
        CHECK(((sum / n) - syn.class_means.row(c)).cwiseAbs().maxCoeff() < 0.12);
    }
}

TEST_CASE("synthetic generation is seed-deterministic") {
    SyntheticSpec s;
    s.seed = 9;
    CHECK(same(make_synthetic(s), make_synthetic(s)));
    s.seed = 10;
    const auto other = make_synthetic(s);
    s.seed = 9;
    CHECK_FALSE(same(make_synthetic(s), other));
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec s;
    s.n_unseen = 0;
    CHECK_THROWS_AS(make_synthetic(s), ConfigError);
    s = SyntheticSpec{};
    s.test_fraction = 1.0;
    CHECK_THROWS_AS(make_synthetic(s), ConfigError);
    s = SyntheticSpec{};
    s.d = 1;
    s.visual_separation = 50.0;
    CHECK_THROWS_AS(make_synthetic(s), ConfigError);
}

TEST_CASE("standardize uses train statistics") {
    auto ds = make_synthetic(rlvc::test::small_spec());
    standardize(ds);
    const auto x = ds.features_of(ds.rows(Split::Train));
    const Eigen::RowVectorXd mu = x.colwise().mean();
    CHECK(mu.cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::RowVectorXd var = (x.rowwise() - mu).array().square().colwise().mean();
    CHECK((var.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("feature export round trip is exact") {
    TempDir dir("exp");
    Rng rng(14);
    const Matrix x = rlvc::test::randn(7, 5, rng) * 1e3;
    const std::vector<int> y{4, 4, 3, 3, 9, 0, 1};
    export_features(x, y, dir.path(), Split::TestUnseen);
    const auto back = read_features(dir.path());
    CHECK(back.features == x);
    CHECK(back.labels == y);
    for (auto s : back.splits) CHECK(s == Split::TestUnseen);
    CHECK_THROWS_AS(export_features(x, std::vector<int>{1}, dir.path()), ConfigError);
}

TEST_CASE("empty and 1x1 exports") {
    TempDir dir("small");
    export_features(Matrix(0, 3), std::vector<int>{}, dir / "empty");
    CHECK(slurp(dir / "empty" / "features.csv").empty());
    CHECK(read_features(dir / "empty").features.rows() == 0);

    export_features(Matrix::Constant(1, 1, 3.5), std::vector<int>{2}, dir / "one");
    CHECK(slurp(dir / "one" / "features.csv") == "3.5\n");
    CHECK(slurp(dir / "one" / "labels.csv") == "2,train\n");
    CHECK(read_features(dir / "one").features(0, 0) == 3.5);
}

TEST_CASE("format_real is shortest round trip") {
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(-2.0) == "-2");
    Rng rng(15);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        CHECK(std::stod(format_real(v)) == v);
    }
}
