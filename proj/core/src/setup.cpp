#include "wfc/derivation.hpp"
#include "wfc/emit_freefem.hpp"
#include "wfc/emit_latex.hpp"

#include <filesystem>
#include <fstream>

namespace wfc {

namespace {

void write_file(const std::string& dir, const std::string& name, const std::string& content,
                std::vector<std::string>& written) {
    require(name.find('/') == std::string::npos && name.find("..") == std::string::npos,
            "emission: file name escapes the output directory: " + name);
    std::filesystem::create_directories(dir);
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    require(f.good(), "emission: cannot open " + dir + "/" + name + " for writing");
    f << content;
    require(f.good(), "emission: write failed for " + name);
    written.push_back(name);
}

std::string varf_file(const std::string& title, const std::string& what,
                      const std::string& body) {
    return "// " + what + " of the " + title + " problem.\n" + body;
}

}  // namespace

std::vector<std::string> setup_simulation(const LagrangianDef& L, const EmissionContext& ctx,
                                          const std::string& out_dir) {
    L.validate();
    Classification cls = classify(L);
    const bool nonlinear = cls == Classification::Nonlinear;
    std::vector<std::string> written;

    write_file(out_dir, "run_" + L.name + ".edp", emit_sim_driver(L, ctx, cls), written);
    write_file(out_dir, L.name + "Residual.edp",
               varf_file(L.title, "Residual forms", emit_residual_varf(L, ctx, !nonlinear)),
               written);

    DocDerivations docs;
    docs.classification = cls;
    DerivedSystem newton;
    if (nonlinear) {
        newton = newton_system(L);
        write_file(out_dir, L.name + "Newton.edp",
                   varf_file(L.title, "Jacobian forms", emit_varf(newton, ctx)), written);
        docs.newton = &newton;
    }

    write_file(out_dir, L.name + ".tex", document(L, docs).to_text(), written);
    write_file(out_dir, L.name + "Constants.tex", constants_table(L.constants), written);
    return written;
}

std::vector<std::string> setup_optimization(const LagrangianDef& L,
                                            const EmissionContext& ctx,
                                            const OptimizationParams& params,
                                            const std::string& out_dir) {
    L.validate();
    Classification cls = classify(L);
    std::vector<std::string> written;

    DerivedSystem newton = newton_system(L);
    DerivedSystem adjoint = adjoint_system(L);
    ShapeDerivation shape = derive_shape(L);

    write_file(out_dir, "optimize_" + L.name + ".edp",
               emit_opt_driver(L, ctx, params, cls), written);
    write_file(out_dir, L.name + "Objective.edp",
               varf_file(L.title, "Objective functional", emit_objective_fn(L, ctx)),
               written);
    write_file(out_dir, L.name + "Residual.edp",
               varf_file(L.title, "Residual forms", emit_residual_varf(L, ctx, false)),
               written);
    write_file(out_dir, L.name + "Newton.edp",
               varf_file(L.title, "Jacobian forms", emit_varf(newton, ctx)), written);
    write_file(out_dir, L.name + "Adjoint.edp",
               varf_file(L.title, "Adjoint forms", emit_varf(adjoint, ctx)), written);
    write_file(out_dir, L.name + "Shape.edp",
               varf_file(L.title, "Shape derivative", emit_shape_varf(shape, ctx)), written);

    DocDerivations docs;
    docs.classification = cls;
    if (cls == Classification::Nonlinear) docs.newton = &newton;
    docs.adjoint = &adjoint;
    docs.shape = &shape;
    write_file(out_dir, L.name + ".tex", document(L, docs).to_text(), written);
    write_file(out_dir, L.name + "Constants.tex", constants_table(L.constants), written);
    return written;
}

}  // namespace wfc
