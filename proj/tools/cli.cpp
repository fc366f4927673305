#include "cli.hpp"

#include "wfc/emit_freefem.hpp"
#include "wfc/emit_latex.hpp"
#include "wfc/problems.hpp"
#include "wfc/verify.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace wfc::cli {

namespace {

const ExampleDef* resolve(const std::string& key) {
    const ExampleDef* e = find_example(key);
    if (!e) {
        std::cerr << "unknown example '" << key << "'; see `wfc list`\n";
    }
    return e;
}

int cmd_list() {
    for (const auto& e : examples()) {
        std::cout << e.key << "  (" << e.dim << "d"
                  << (e.optimization ? ", optimization" : ", simulation") << ") - "
                  << e.note << "\n";
    }
    return 0;
}

int cmd_emit(const std::string& key, const std::string& mode, int dim,
             const std::string& out, const std::string& mesh) {
    const ExampleDef* e = resolve(key);
    if (!e) return 2;
    if (dim != 0 && dim != e->dim) {
        std::cerr << "example '" << key << "' is " << e->dim << "d only\n";
        return 2;
    }
    if (mode == "opt" && !e->optimization) {
        std::cerr << "example '" << key << "' has no optimization setup\n";
        return 2;
    }
    LagrangianDef L = e->build();
    EmissionContext ctx;
    ctx.dim = e->dim;
    ctx.mesh_file = mesh.empty() ? e->default_mesh : mesh;
    std::vector<std::string> files;
    if (mode == "sim")
        files = setup_simulation(L, ctx, out);
    else
        files = setup_optimization(L, ctx, e->opt, out);
    for (const auto& f : files) std::cout << out << "/" << f << "\n";
    return 0;
}

int cmd_doc(const std::string& key, const std::string& out) {
    const ExampleDef* e = resolve(key);
    if (!e) return 2;
    LagrangianDef L = e->build();
    DocDerivations docs;
    docs.classification = classify(L);
    DerivedSystem newton, adjoint;
    ShapeDerivation shape;
    if (docs.classification == Classification::Nonlinear) {
        newton = newton_system(L);
        docs.newton = &newton;
    }
    if (e->optimization) {
        adjoint = adjoint_system(L);
        shape = derive_shape(L);
        docs.adjoint = &adjoint;
        docs.shape = &shape;
    }
    std::filesystem::create_directories(out);
    {
        std::ofstream f(std::filesystem::path(out) / (L.name + ".tex"), std::ios::binary);
        f << document(L, docs).to_text();
    }
    {
        std::ofstream f(std::filesystem::path(out) / (L.name + "Constants.tex"),
                        std::ios::binary);
        f << constants_table(L.constants);
    }
    std::cout << out << "/" << L.name << ".tex\n"
              << out << "/" << L.name << "Constants.tex\n";
    return 0;
}

int cmd_verify(const std::string& key, bool taylor, bool fd, bool pullback,
               const std::string& csv_path) {
    const ExampleDef* e = resolve(key);
    if (!e) return 2;
    if (!taylor && !fd && !pullback) taylor = fd = pullback = true;
    LagrangianDef L = e->build();
    VerificationSetup v = e->verification(L);
    bool ok = true;

    if (fd) {
        std::cout << "directional-derivative checks (central differences, h = 1e-5):\n";
        for (size_t i = 0; i < L.residuals.size(); ++i) {
            for (size_t j = 0; j < L.trials.size(); ++j) {
                DerivativeReport r = verify_gateaux(L.residuals[i], L.trials[j],
                                                    L.tests[j], v.binding, v.quadrature);
                std::cout << "  dR" << i + 1 << "/d(" << L.trials[j]->ff_symbol
                          << ")  symbolic = " << r.symbolic << "  fd = " << r.fd
                          << "  rel_err = " << r.rel_err << "  ["
                          << (r.pass ? "PASS" : "FAIL") << "]\n";
                ok = ok && r.pass;
            }
        }
    }

    if (pullback) {
        std::cout << "change-of-variables checks (mapped quadrature oracle):\n";
        auto p = make_perturbation(make_velocity_field(L.trials[0]->domain));
        auto fdecl = std::make_shared<BoundaryFn>();
        fdecl->symbol = "f_{c}";
        fdecl->rank = 0;
        fdecl->ff_components = {"x + y"};
        Expr f = boundary_ref(fdecl);
        NumericBinding b = v.binding;
        b.coordinate_fns[fdecl->symbol] =
            poly_scalar_field(b.dim, PolyCoeffs{0.0, 1.0, 1.0});
        for (double t : {0.1, 0.2, 0.3}) {
            PullbackReport r =
                verify_pullback_volume(f, p, t, b, v.quadrature, L.domains.at(0));
            std::cout << "  volume  t = " << t << "  mapped = " << r.mapped
                      << "  pulled back = " << r.pulled_back << "  err = " << r.abs_err
                      << "  ["
                      << (r.degenerate ? "SKIP (degenerate)" : (r.pass ? "PASS" : "FAIL"))
                      << "]\n";
            ok = ok && (r.pass || r.degenerate);
        }
        if (!v.quadrature.boundary.empty()) {
            const auto& [label, segs] = *v.quadrature.boundary.begin();
            for (double t : {0.1, 0.2, 0.3}) {
                PullbackReport r = verify_pullback_boundary(
                    f, p, t, b, segs.front(), v.quadrature.order, L.domains.at(0), label);
                std::cout << "  boundary t = " << t << "  mapped = " << r.mapped
                          << "  pulled back = " << r.pulled_back << "  err = " << r.abs_err
                          << "  ["
                          << (r.degenerate ? "SKIP (degenerate)"
                                           : (r.pass ? "PASS" : "FAIL"))
                          << "]\n";
                ok = ok && (r.pass || r.degenerate);
            }
        }
    }

    if (taylor) {
        auto p = make_perturbation(make_velocity_field(L.trials[0]->domain));
        TaylorReport r =
            verify_shape_taylor(L, p, v.binding, v.quadrature, default_taylor_range());
        std::cout << r.text();
        if (!csv_path.empty()) {
            std::ofstream f(csv_path, std::ios::binary);
            f << r.csv();
        }
        ok = ok && r.pass;
    }

    return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"symbolic weak-form compiler: derivations, script and LaTeX emission, "
                 "numeric verification"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "list the built-in example problems");

    std::string key, mode = "sim", out = ".", mesh, csv;
    int dim = 0;
    auto* emit = app.add_subcommand("emit", "emit solver/optimizer scripts");
    emit->add_option("example", key, "example name")->required();
    emit->add_option("--mode", mode, "sim or opt")
        ->check(CLI::IsMember({"sim", "opt"}));
    emit->add_option("--dim", dim, "ambient dimension (must match the example)");
    emit->add_option("--out", out, "output directory");
    emit->add_option("--mesh", mesh, "mesh file included by the driver");

    std::string dkey, dout = ".";
    auto* doc = app.add_subcommand("doc", "emit the LaTeX documentation");
    doc->add_option("example", dkey, "example name")->required();
    doc->add_option("--out", dout, "output directory");

    std::string vkey;
    bool taylor = false, fd = false, pullback = false;
    auto* verify = app.add_subcommand("verify", "run the numeric verification reports");
    verify->add_option("example", vkey, "example name")->required();
    verify->add_flag("--taylor", taylor, "shape-derivative Taylor test");
    verify->add_flag("--fd", fd, "finite-difference derivative checks");
    verify->add_flag("--pullback", pullback, "change-of-variables checks");
    verify->add_option("--csv", csv, "write the Taylor report as CSV (columns t,e1,e2)");

    std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 pops from the back
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError&) {
        std::cerr << app.help();
        return 2;
    }

    try {
        if (list->parsed()) return cmd_list();
        if (emit->parsed()) return cmd_emit(key, mode, dim, out, mesh);
        if (doc->parsed()) return cmd_doc(dkey, dout);
        if (verify->parsed()) return cmd_verify(vkey, taylor, fd, pullback, csv);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace wfc::cli
