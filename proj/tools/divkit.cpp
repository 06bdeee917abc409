#include <divkit/cli.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

divkit::Point to_point(const std::vector<double>& v) { return divkit::Point(v.begin(), v.end()); }

}  // namespace

int main(int argc, char** argv) {
    using namespace divkit;
    CLI::App app{"divkit: divergence operators on coordinate charts"};
    app.require_subcommand(1);

    std::string spec_path;
    cli::Options opts;
    std::uint64_t seed = 0;
    double tol = 0.0;
    std::size_t points = 0;

    // Shared flags on every subcommand.
    auto common = [&](CLI::App* sub) {
        sub->add_option("--spec", spec_path, "model file")->required();
        sub->add_option("--seed", seed, "sampling seed (falls back to DIVKIT_SEED)");
        sub->add_option("--tol", tol, "residual tolerance");
        sub->add_option("--points", points, "number of sample points");
    };

    std::string op, field, candidate, base, volume, connection;
    bool fd = false;
    std::vector<double> at, center;
    double radius = 0.0;
    std::size_t direction = 1;
    int resolution = 0;

    auto* axioms = app.add_subcommand("check-axioms", "sample the cocycle and Leibniz residuals of an operator");
    common(axioms);
    axioms->add_option("--operator", op);
    axioms->add_flag("--finite-difference", fd, "evaluate through the black-box path");

    auto* classify = app.add_subcommand("classify", "decide whether an operator is the divergence of a volume form");
    common(classify);
    classify->add_option("--candidate", candidate);
    classify->add_option("--base", base);

    auto* divergence = app.add_subcommand("divergence", "apply an operator to a vector field");
    common(divergence);
    divergence->add_option("--operator", op);
    divergence->add_option("--field", field);
    divergence->add_option("--at", at, "evaluate at this point only")->delimiter(',');

    auto* kn = app.add_subcommand("verify-kn", "compare parallelism of a volume form with equality of divergences");
    common(kn);
    kn->add_option("--volume", volume);
    kn->add_option("--connection", connection);

    auto* vanish = app.add_subcommand("integrate-vanish", "integrate the divergence of a bump field over the box");
    common(vanish);
    vanish->add_option("--volume", volume, "volume section or operator name");
    vanish->add_option("--center", center, "bump center, default the box center")->delimiter(',');
    vanish->add_option("--radius", radius, "bump radius, default 0.4 of the shortest side");
    vanish->add_option("--direction", direction, "1-based coordinate index");
    vanish->add_option("--resolution", resolution, "grid cells per axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cli::kInvalid;
    }

    auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
    CLI::App* sub = app.get_subcommands().front();
    if (given(sub, "--seed")) opts.seed = seed;
    if (given(sub, "--tol")) opts.tol = tol;
    if (given(sub, "--points")) opts.points = points;

    return cli::guarded(std::cerr, [&] {
        const SpecFile spec = parse_specfile(spec_path);
        if (sub == axioms) return cli::cmd_check_axioms(spec, op, opts, std::cout, fd);
        if (sub == classify) return cli::cmd_classify(spec, candidate, base, opts, std::cout);
        if (sub == divergence) {
            std::optional<Point> p;
            if (!at.empty()) p = to_point(at);
            return cli::cmd_divergence(spec, op, field, opts, std::cout, p);
        }
        if (sub == kn) return cli::cmd_verify_kn(spec, volume, connection, opts, std::cout);
        cli::BumpOptions bump;
        if (!center.empty()) bump.center = to_point(center);
        if (given(vanish, "--radius")) bump.radius = radius;
        if (direction < 1) throw ValidationError("--direction is 1-based", 0);
        bump.direction = direction - 1;
        if (given(vanish, "--resolution")) bump.resolution = resolution;
        return cli::cmd_integrate_vanish(spec, volume, bump, std::cout);
    });
}
