#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "curvetomo/curvetomo.h"

using Json = nlohmann::ordered_json;

namespace {

struct Options {
    std::string geometry, out, image, data, truth, phantom, form = "levelset", method = "cg", family = "breathing";
    std::string seed = "0xC0FFEE";
    std::size_t pairs = 10, iters = 50, samples = 0, dirs = 64, n = 0, ns = 0, nt = 0;
    double tol = 1e-6, tikhonov = 0.0, x = 0.0, y = 0.0, xi1 = 3.0, xi2 = 4.0, base = 0.0, radius = 0.0, s_max = 0.0;
    std::vector<double> amplitudes, deltas;
    bool order_probe = false, nonsymmetric = false;
};

std::uint64_t parse_seed(const std::string& s) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument("bad seed");
    return v;
}

void put_if(Json& j, const char* key, const std::string& v) {
    if (!v.empty()) j[key] = v;
}
template <class T>
void put_if(Json& j, const char* key, T v, const CLI::App* sub, const char* flag) {
    const auto* opt = sub->get_option_no_throw(flag);
    if (opt && opt->count() > 0) j[key] = v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curvetomo: tomography along curved level sets"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(ct_version()));
    Options o;

    auto common = [&](CLI::App* sub, bool geometry) {
        if (geometry) sub->add_option("--geometry,--config", o.geometry, "geometry config JSON")->required();
        sub->add_option("--out", o.out, "output stem (manifest goes to <out>.manifest.json)");
        sub->add_option("--seed", o.seed, "random seed (decimal or 0x hex)");
    };

    auto* phantom = app.add_subcommand("phantom", "render a phantom and its boundary wavefront set");
    common(phantom, true);
    phantom->add_option("--phantom", o.phantom, "ellipse phantom JSON (default phantom if omitted)");

    auto* forward = app.add_subcommand("forward", "apply the forward operator to an image");
    common(forward, true);
    forward->add_option("--image", o.image, "input image stem")->required();
    forward->add_option("--form", o.form, "levelset | lagrangian | rays");

    auto* adj = app.add_subcommand("adjoint-test", "dot-product test of forward vs backprojection");
    common(adj, true);
    adj->add_option("--pairs", o.pairs, "number of random pairs");

    auto* bolker = app.add_subcommand("check-bolker", "Bolker determinant, rank of dPi_Y, mixed-Hessian equivalence");
    common(bolker, true);
    bolker->add_option("--samples", o.samples, "number of random (t, x) samples");

    auto* vis = app.add_subcommand("visibility", "visible directions at a point");
    common(vis, true);
    vis->add_option("--x", o.x);
    vis->add_option("--y", o.y);
    vis->add_option("--dirs", o.dirs, "number of directions on the circle");

    auto* sym = app.add_subcommand("symbol", "principal symbol of the normal operator");
    common(sym, true);
    sym->add_option("--x", o.x);
    sym->add_option("--y", o.y);
    sym->add_option("--xi1", o.xi1);
    sym->add_option("--xi2", o.xi2);
    sym->add_flag("--order-probe", o.order_probe, "also fit the symbol order from a Gaussian probe");

    auto* normal = app.add_subcommand("normal", "apply the normal operator");
    common(normal, true);
    normal->add_option("--image", o.image, "input image stem")->required();
    normal->add_flag("--nonsymmetric", o.nonsymmetric, "use R* M R instead of the symmetrised form");

    auto* recon = app.add_subcommand("reconstruct", "solve the normal equations");
    common(recon, true);
    recon->add_option("--data", o.data, "sinogram stem")->required();
    recon->add_option("--iters", o.iters, "maximum iterations");
    recon->add_option("--tol", o.tol, "relative residual tolerance");
    recon->add_option("--tikhonov", o.tikhonov, "Tikhonov weight");
    recon->add_option("--method", o.method, "cg | landweber");
    recon->add_option("--truth", o.truth, "ground-truth image stem for error reporting");

    auto* stab = app.add_subcommand("stability", "H1/L2 stability ratios over motion amplitudes");
    common(stab, false);
    stab->add_option("--family", o.family, "rotation | breathing | affine | sync");
    stab->add_option("--amplitudes", o.amplitudes)->delimiter(',');
    stab->add_option("--samples", o.samples);
    stab->add_option("--n", o.n, "grid size");
    stab->add_option("--ns", o.ns);
    stab->add_option("--nt", o.nt);

    auto* pert = app.add_subcommand("perturb-sweep", "data change against motion perturbation size");
    common(pert, false);
    pert->add_option("--family", o.family, "rotation | breathing | affine");
    pert->add_option("--base", o.base, "base amplitude");
    pert->add_option("--deltas", o.deltas)->delimiter(',');
    pert->add_option("--n", o.n, "grid size");
    pert->add_option("--ns", o.ns);
    pert->add_option("--nt", o.nt);

    auto* fan = app.add_subcommand("fanbeam-convert", "rebin fan-beam data onto a parallel grid");
    common(fan, false);
    fan->add_option("--data", o.data, "fan sinogram stem")->required();
    fan->add_option("--radius", o.radius, "source radius (read from the sidecar if omitted)");
    fan->add_option("--ns", o.ns);
    fan->add_option("--nt", o.nt);
    fan->add_option("--s-max", o.s_max);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string cmd = sub->get_name();
    Json j = Json::object();
    put_if(j, "config", o.geometry);
    put_if(j, "out", o.out);
    try {
        j["seed"] = parse_seed(o.seed);
    } catch (const std::exception&) {
        std::cerr << "error: bad --seed '" << o.seed << "'\n";
        return 2;
    }
    put_if(j, "image", o.image);
    put_if(j, "data", o.data);
    put_if(j, "truth", o.truth);
    put_if(j, "phantom", o.phantom);
    if (cmd == "forward") j["form"] = o.form;
    if (cmd == "adjoint-test") j["pairs"] = o.pairs;
    if (cmd == "reconstruct") {
        j["iters"] = o.iters;
        j["tol"] = o.tol;
        j["tikhonov"] = o.tikhonov;
        j["method"] = o.method;
    }
    if (cmd == "stability" || cmd == "perturb-sweep") j["family"] = o.family;
    if (cmd == "symbol" && o.order_probe) j["order_probe"] = true;
    if (cmd == "normal") j["symmetric"] = !o.nonsymmetric;
    put_if(j, "samples", o.samples, sub, "--samples");
    put_if(j, "dirs", o.dirs, sub, "--dirs");
    put_if(j, "x", o.x, sub, "--x");
    put_if(j, "y", o.y, sub, "--y");
    put_if(j, "xi1", o.xi1, sub, "--xi1");
    put_if(j, "xi2", o.xi2, sub, "--xi2");
    put_if(j, "amplitudes", o.amplitudes, sub, "--amplitudes");
    put_if(j, "deltas", o.deltas, sub, "--deltas");
    put_if(j, "base", o.base, sub, "--base");
    put_if(j, "n", o.n, sub, "--n");
    put_if(j, "ns", o.ns, sub, "--ns");
    put_if(j, "nt", o.nt, sub, "--nt");
    put_if(j, "radius", o.radius, sub, "--radius");
    put_if(j, "s_max", o.s_max, sub, "--s-max");

    char* result = nullptr;
    const ct_status st = ct_run_pipeline(cmd.c_str(), j.dump().c_str(), &result);
    if (st != CT_OK) {
        std::cerr << "error: " << ct_last_error() << "\n";
        return ct_exit_code(st);
    }
    std::cout << Json::parse(result)["results"].dump(2) << "\n";
    ct_string_free(result);
    return 0;
}
