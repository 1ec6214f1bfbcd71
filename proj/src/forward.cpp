#include "pduu/forward.hpp"

#include <cmath>
#include <sstream>

#include "pduu/errors.hpp"

namespace pduu {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void append(Triplets& trip, const SparseOperator& a, Eigen::Index row0, Eigen::Index col0, double scale = 1.0) {
    for (Eigen::Index k = 0; k < a.outerSize(); ++k)
        for (SparseOperator::InnerIterator it(a, k); it; ++it)
            trip.emplace_back(static_cast<int>(row0 + it.row()), static_cast<int>(col0 + it.col()), scale * it.value());
}

}  // namespace

void ModelParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream os;
            os << "model parameter " << name << " must be positive and finite (got " << v << ")";
            throw ArgumentError(os.str());
        }
    };
    positive(kappa_s, "kappa_s");
    positive(kappa_f, "kappa_f");
    positive(h_exchange, "h_exchange");
    positive(C_compress, "C_compress");
    positive(mu, "mu");
    positive(K_bulk, "K_bulk");
    if (!(bc.conv_coeff >= 0.0)) throw ArgumentError("conv_coeff must be nonnegative");
    if (!std::isfinite(bc.T_hot) || !std::isfinite(bc.T_cold) || !bc.traction.allFinite())
        throw ArgumentError("boundary data must be finite");
}

PorosityField::PorosityField(NodalField phi_f) : phi_f_(std::move(phi_f)) {
    for (Eigen::Index i = 0; i < phi_f_.size(); ++i) {
        if (!(phi_f_[i] > 0.0 && phi_f_[i] < 1.0)) {
            std::ostringstream os;
            os << "porosity must lie in (0,1); vertex " << i << " has " << phi_f_[i];
            throw PorosityRangeError(os.str(), static_cast<std::size_t>(i), phi_f_[i]);
        }
    }
}

PorosityField porosity_map(const NodalField& d, const NodalField& m) {
    if (d.size() != m.size()) throw ArgumentError("design and uncertain fields differ in size");
    NodalField phi = (kPorosityMin + kPorositySpan * (d + m).array()).matrix();
    Eigen::Index worst = -1;
    double worst_excess = 0.0;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        const double v = phi[i];
        double excess = 0.0;
        if (!std::isfinite(v)) excess = INFINITY;
        else if (v <= 0.01) excess = 0.01 - v + 1e-300;
        else if (v >= 0.99) excess = v - 0.99 + 1e-300;
        if (excess > worst_excess) {
            worst_excess = excess;
            worst = i;
        }
    }
    if (worst >= 0) {
        std::ostringstream os;
        os << "porosity " << phi[worst] << " at vertex " << worst << " is outside (0.01, 0.99)";
        throw PorosityRangeError(os.str(), static_cast<std::size_t>(worst), phi[worst]);
    }
    return PorosityField(std::move(phi));
}

Vector AffineSubsystem::objective_gradient(const Vector& x, const NodalField& phi) const {
    return objective_hessian_apply(x, phi) + objective_linear(phi);
}

Vector AffineSubsystem::objective_sensitivity(const Vector& x) const {
    return 0.5 * objective_form_sensitivity(x, x) + objective_linear_sensitivity(x);
}

// ---------------------------------------------------------------------------
// Thermal

namespace {

// Lumped exchange and convection terms keep the thermal operator an M-matrix on
// non-obtuse meshes, so the discrete maximum principle holds.
constexpr EdgeQuadrature kThermalEdges = EdgeQuadrature::Lumped;

SparseOperator lumped(const Mesh& mesh) {
    const Vector w = lumped_mass(mesh);
    SparseOperator d(w.size(), w.size());
    d.reserve(Eigen::VectorXi::Ones(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) d.insert(i, i) = w[i];
    d.makeCompressed();
    return d;
}
}  // namespace

ThermalSubsystem::ThermalSubsystem(std::shared_ptr<const Mesh> mesh, const ModelParams& params)
    : mesh_(std::move(mesh)), params_(params), n_(static_cast<Eigen::Index>(mesh_->num_vertices())),
      mass_(lumped(*mesh_)) {}

SparseOperator ThermalSubsystem::blocks(const NodalField& ws, const NodalField& wf, double boundary_coeff,
                                        bool with_exchange) const {
    const Mesh& mesh = *mesh_;
    SparseOperator ass = assemble_stiffness_form(mesh, params_.kappa_s * ws);
    SparseOperator aff = assemble_stiffness_form(mesh, params_.kappa_f * wf);
    if (boundary_coeff != 0.0) {
        for (BoundaryTag tag : {BoundaryTag::Outer, BoundaryTag::Inner}) {
            ass += assemble_robin(mesh, tag, ws, boundary_coeff, 0.0, kThermalEdges).matrix;
            aff += assemble_robin(mesh, tag, wf, boundary_coeff, 0.0, kThermalEdges).matrix;
        }
    }
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(ass.nonZeros() + aff.nonZeros() + 4 * mass_.nonZeros()));
    append(trip, ass, 0, 0);
    append(trip, aff, n_, n_);
    if (with_exchange) {
        const double h = params_.h_exchange;
        append(trip, mass_, 0, 0, h);
        append(trip, mass_, n_, n_, h);
        append(trip, mass_, 0, n_, -h);
        append(trip, mass_, n_, 0, -h);
    }
    SparseOperator a(2 * n_, 2 * n_);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    return a;
}

Vector ThermalSubsystem::loads(const NodalField& ws, const NodalField& wf, double coeff) const {
    const Mesh& mesh = *mesh_;
    const auto& bc = params_.bc;
    Vector b(2 * n_);
    b.head(n_) = assemble_robin(mesh, BoundaryTag::Outer, ws, coeff, bc.T_hot, kThermalEdges).load +
                 assemble_robin(mesh, BoundaryTag::Inner, ws, coeff, bc.T_cold, kThermalEdges).load;
    b.tail(n_) = assemble_robin(mesh, BoundaryTag::Outer, wf, coeff, bc.T_hot, kThermalEdges).load +
                 assemble_robin(mesh, BoundaryTag::Inner, wf, coeff, bc.T_cold, kThermalEdges).load;
    return b;
}

SparseOperator ThermalSubsystem::matrix(const NodalField& phi) const {
    return blocks(NodalField::Ones(n_) - phi, phi, params_.bc.conv_coeff, true);
}

Vector ThermalSubsystem::rhs(const NodalField& phi) const {
    return loads(NodalField::Ones(n_) - phi, phi, params_.bc.conv_coeff);
}

SparseOperator ThermalSubsystem::matrix_derivative(const NodalField& dir) const {
    return blocks(-dir, dir, params_.bc.conv_coeff, false);
}

Vector ThermalSubsystem::rhs_derivative(const NodalField& dir) const {
    return loads(-dir, dir, params_.bc.conv_coeff);
}

double ThermalSubsystem::objective(const Vector& x, const NodalField& phi) const {
    return 0.5 * x.dot(objective_hessian_apply(x, phi)) + objective_linear(phi).dot(x);
}

Vector ThermalSubsystem::objective_hessian_apply(const Vector& y, const NodalField& phi) const {
    return blocks(NodalField::Ones(n_) - phi, phi, 1.0, false) * y;
}

Vector ThermalSubsystem::objective_linear(const NodalField& phi) const {
    return loads(NodalField::Ones(n_) - phi, phi, 1.0);
}

Vector ThermalSubsystem::objective_mixed_apply(const Vector& x, const NodalField& dir) const {
    return blocks(-dir, dir, 1.0, false) * x + loads(-dir, dir, 1.0);
}

Vector ThermalSubsystem::form_sensitivity(const Vector& x, const Vector& y, double boundary_coeff) const {
    const Mesh& mesh = *mesh_;
    const Vector xs = x.head(n_), xf = x.tail(n_), ys = y.head(n_), yf = y.tail(n_);
    Vector s = -params_.kappa_s * stiffness_sensitivity(mesh, xs, ys) +
               params_.kappa_f * stiffness_sensitivity(mesh, xf, yf);
    if (boundary_coeff != 0.0) {
        for (BoundaryTag tag : {BoundaryTag::Outer, BoundaryTag::Inner}) {
            s += boundary_coeff * (robin_sensitivity(mesh, tag, xf, yf, kThermalEdges) -
                                   robin_sensitivity(mesh, tag, xs, ys, kThermalEdges));
        }
    }
    return s;
}

Vector ThermalSubsystem::load_sensitivity(const Vector& x, double coeff) const {
    const Mesh& mesh = *mesh_;
    const auto& bc = params_.bc;
    const Vector xs = x.head(n_), xf = x.tail(n_);
    auto side = [&](const Vector& v) -> Vector {
        return bc.T_hot * robin_load_sensitivity(mesh, BoundaryTag::Outer, v, kThermalEdges) +
               bc.T_cold * robin_load_sensitivity(mesh, BoundaryTag::Inner, v, kThermalEdges);
    };
    return coeff * (side(xf) - side(xs));
}

Vector ThermalSubsystem::matrix_sensitivity(const Vector& x, const Vector& y) const {
    return form_sensitivity(x, y, params_.bc.conv_coeff);
}

Vector ThermalSubsystem::rhs_sensitivity(const Vector& x) const {
    return load_sensitivity(x, params_.bc.conv_coeff);
}

Vector ThermalSubsystem::objective_form_sensitivity(const Vector& x, const Vector& y) const {
    return form_sensitivity(x, y, 1.0);
}

Vector ThermalSubsystem::objective_linear_sensitivity(const Vector& y) const { return load_sensitivity(y, 1.0); }

// ---------------------------------------------------------------------------
// Mechanical

MechanicalSubsystem::MechanicalSubsystem(std::shared_ptr<const Mesh> mesh, const ModelParams& params)
    : mesh_(std::move(mesh)), params_(params), n_(static_cast<Eigen::Index>(mesh_->num_vertices())) {
    const Mesh& m = *mesh_;
    const std::vector<int> clamped = m.boundary_vertices(BoundaryTag::Inner);
    if (clamped.empty()) throw ConstraintError("mechanical system needs a clamped (Inner) boundary");

    full_to_free_.assign(static_cast<std::size_t>(3 * n_), 0);
    for (int v : clamped) {
        full_to_free_[static_cast<std::size_t>(v)] = -1;
        full_to_free_[static_cast<std::size_t>(n_ + v)] = -1;
    }
    for (std::size_t i = 0; i < full_to_free_.size(); ++i) {
        if (full_to_free_[i] == 0) {
            full_to_free_[i] = static_cast<int>(free_dofs_.size());
            free_dofs_.push_back(static_cast<int>(i));
        }
    }

    const double mu = params_.mu;
    const double lambda = params_.lambda_lame();
    Eigen::Matrix3d dmat;
    dmat << lambda + 2 * mu, lambda, 0, lambda, lambda + 2 * mu, 0, 0, 0, mu;

    Triplets kt, dt;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangle(t);
        const auto& g = m.geometry(t);
        Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
        for (int i = 0; i < 3; ++i) {
            b(0, 2 * i) = g.grad(0, i);
            b(1, 2 * i + 1) = g.grad(1, i);
            b(2, 2 * i) = g.grad(1, i);
            b(2, 2 * i + 1) = g.grad(0, i);
        }
        const Eigen::Matrix<double, 6, 6> ke = g.area * b.transpose() * dmat * b;
        for (int i = 0; i < 3; ++i)
            for (int ci = 0; ci < 2; ++ci)
                for (int j = 0; j < 3; ++j)
                    for (int cj = 0; cj < 2; ++cj)
                        kt.emplace_back(static_cast<int>(ci * n_ + tri[i]), static_cast<int>(cj * n_ + tri[j]),
                                        ke(2 * i + ci, 2 * j + cj));
        // D_{a,(b,k)} = \int phi_a d_k phi_b = d_k phi_b * area / 3
        for (int a = 0; a < 3; ++a)
            for (int bb = 0; bb < 3; ++bb)
                for (int k = 0; k < 2; ++k)
                    dt.emplace_back(tri[a], static_cast<int>(k * n_ + tri[bb]), g.grad(k, bb) * g.area / 3.0);
    }
    k_full_.resize(2 * n_, 2 * n_);
    k_full_.setFromTriplets(kt.begin(), kt.end());
    d_full_.resize(n_, 2 * n_);
    d_full_.setFromTriplets(dt.begin(), dt.end());

    f_full_ = Vector::Zero(2 * n_);
    for (std::size_t f = 0; f < m.num_facets(); ++f) {
        const auto& facet = m.facets()[f];
        if (facet.tag != BoundaryTag::Outer) continue;
        const double half = 0.5 * m.facet_length(f);
        for (int v : facet.vertices) {
            f_full_[v] += half * params_.bc.traction.x();
            f_full_[n_ + v] += half * params_.bc.traction.y();
        }
    }

    const SparseOperator mass = assemble_mass(m);
    Triplets bt, wt;
    append(bt, k_full_, 0, 0);
    append(bt, d_full_, 2 * n_, 0);
    append(bt, mass, 2 * n_, 2 * n_, params_.C_compress);
    append(wt, k_full_, 0, 0);
    SparseOperator base(3 * n_, 3 * n_), w(3 * n_, 3 * n_);
    base.setFromTriplets(bt.begin(), bt.end());
    w.setFromTriplets(wt.begin(), wt.end());
    base_reduced_ = reduce(base);
    w_reduced_ = reduce(w);
    Vector wl = Vector::Zero(3 * n_);
    wl.head(2 * n_) = f_full_;
    w_lin_reduced_ = restrict_to_free(wl);
}

SparseOperator MechanicalSubsystem::reduce(const SparseOperator& full) const {
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(full.nonZeros()));
    for (Eigen::Index k = 0; k < full.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(full, k); it; ++it) {
            const int r = full_to_free_[static_cast<std::size_t>(it.row())];
            const int c = full_to_free_[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
        }
    }
    SparseOperator out(size(), size());
    out.setFromTriplets(trip.begin(), trip.end());
    out.makeCompressed();
    return out;
}

Vector MechanicalSubsystem::expand(const Vector& reduced) const {
    Vector full = Vector::Zero(3 * n_);
    for (std::size_t i = 0; i < free_dofs_.size(); ++i) full[free_dofs_[i]] = reduced[static_cast<Eigen::Index>(i)];
    return full;
}

Vector MechanicalSubsystem::restrict_to_free(const Vector& full) const {
    Vector r(size());
    for (std::size_t i = 0; i < free_dofs_.size(); ++i) r[static_cast<Eigen::Index>(i)] = full[free_dofs_[i]];
    return r;
}

SparseOperator MechanicalSubsystem::coupling(const NodalField& s) const {
    // G_{(b,k),a} = \int phi_a d_k(s phi_b)
    //            = d_k phi_b \int phi_a s + (d_k s) \int phi_a phi_b
    const Mesh& m = *mesh_;
    Triplets trip;
    trip.reserve(18 * m.num_triangles());
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangle(t);
        const auto& g = m.geometry(t);
        const Eigen::Vector3d se(s[tri[0]], s[tri[1]], s[tri[2]]);
        Eigen::Matrix3d me;
        me.setConstant(g.area / 12.0);
        me.diagonal().setConstant(g.area / 6.0);
        const Eigen::Vector3d ms = me * se;
        const Eigen::Vector2d grad_s = g.grad * se;
        for (int bb = 0; bb < 3; ++bb)
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a < 3; ++a)
                    trip.emplace_back(static_cast<int>(k * n_ + tri[bb]), tri[a],
                                      g.grad(k, bb) * ms[a] + grad_s[k] * me(a, bb));
    }
    SparseOperator gmat(2 * n_, n_);
    gmat.setFromTriplets(trip.begin(), trip.end());
    return gmat;
}

SparseOperator MechanicalSubsystem::coupling_block(const NodalField& s) const {
    Triplets trip;
    append(trip, coupling(s), 0, 2 * n_);
    SparseOperator full(3 * n_, 3 * n_);
    full.setFromTriplets(trip.begin(), trip.end());
    return reduce(full);
}

SparseOperator MechanicalSubsystem::matrix(const NodalField& phi) const {
    SparseOperator a = base_reduced_ + coupling_block((2.0 * phi.array() - 1.0).matrix());
    a.makeCompressed();
    return a;
}

SparseOperator MechanicalSubsystem::matrix_derivative(const NodalField& dir) const {
    // d/dphi of G(2 phi - 1) along dir is G(2 dir).
    return coupling_block(2.0 * dir);
}

Vector MechanicalSubsystem::rhs(const NodalField&) const { return w_lin_reduced_; }

Vector MechanicalSubsystem::rhs_derivative(const NodalField&) const { return Vector::Zero(size()); }

double MechanicalSubsystem::objective(const Vector& x, const NodalField&) const {
    return 0.5 * x.dot(w_reduced_ * x) + w_lin_reduced_.dot(x);
}

Vector MechanicalSubsystem::objective_hessian_apply(const Vector& y, const NodalField&) const {
    return w_reduced_ * y;
}

Vector MechanicalSubsystem::objective_linear(const NodalField&) const { return w_lin_reduced_; }

Vector MechanicalSubsystem::objective_mixed_apply(const Vector&, const NodalField&) const {
    return Vector::Zero(size());
}

Vector MechanicalSubsystem::matrix_sensitivity(const Vector& x, const Vector& y) const {
    // d/dphi_c (x_u^T G(2 phi - 1) y_p) = 2 d/ds_c (x_u^T G(s) y_p)
    const Mesh& m = *mesh_;
    const Vector xf = expand(x);
    const Vector yf = expand(y);
    Vector sens = Vector::Zero(n_);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const auto& tri = m.triangle(t);
        const auto& g = m.geometry(t);
        Eigen::Matrix3d me;
        me.setConstant(g.area / 12.0);
        me.diagonal().setConstant(g.area / 6.0);
        const Eigen::Vector3d yp(yf[2 * n_ + tri[0]], yf[2 * n_ + tri[1]], yf[2 * n_ + tri[2]]);
        const Eigen::Vector3d xx(xf[tri[0]], xf[tri[1]], xf[tri[2]]);
        const Eigen::Vector3d xy(xf[n_ + tri[0]], xf[n_ + tri[1]], xf[n_ + tri[2]]);
        const double div_x = g.grad.row(0).dot(xx) + g.grad.row(1).dot(xy);
        const Eigen::Vector3d my = me * yp;
        const double px = xx.dot(my);
        const double py = xy.dot(my);
        for (int c = 0; c < 3; ++c) sens[tri[c]] += 2.0 * (div_x * my[c] + g.grad(0, c) * px + g.grad(1, c) * py);
    }
    return sens;
}

Vector MechanicalSubsystem::rhs_sensitivity(const Vector&) const { return Vector::Zero(n_); }

Vector MechanicalSubsystem::objective_form_sensitivity(const Vector&, const Vector&) const { return Vector::Zero(n_); }

Vector MechanicalSubsystem::objective_linear_sensitivity(const Vector&) const { return Vector::Zero(n_); }

// ---------------------------------------------------------------------------
// Forward model

ForwardModel::ForwardModel(std::shared_ptr<const Mesh> mesh, const ModelParams& params)
    : mesh_(std::move(mesh)), params_((params.validate(), params)), thermal_(mesh_, params_),
      mechanical_(mesh_, params_) {}

void ForwardModel::solve_thermal(const PorosityField& phi, ForwardState& state) const {
    if (phi.size() != num_vertices()) throw ArgumentError("porosity size does not match the mesh");
    SpdSolver solver(thermal_.matrix(phi.fluid()));
    const Vector x = solver.solve(thermal_.rhs(phi.fluid()));
    const Eigen::Index n = num_vertices();
    state.T_s = x.head(n);
    state.T_f = x.tail(n);
}

void ForwardModel::solve_mechanical(const PorosityField& phi, ForwardState& state) const {
    if (phi.size() != num_vertices()) throw ArgumentError("porosity size does not match the mesh");
    LuSolver solver(mechanical_.matrix(phi.fluid()));
    const Vector full = mechanical_.expand(solver.solve(mechanical_.rhs(phi.fluid())));
    const Eigen::Index n = num_vertices();
    state.u_x = full.segment(0, n);
    state.u_y = full.segment(n, n);
    state.p = full.segment(2 * n, n);
}

ForwardState ForwardModel::solve(const PorosityField& phi) const {
    ForwardState s;
    solve_thermal(phi, s);
    solve_mechanical(phi, s);
    return s;
}

Vector ForwardModel::thermal_vector(const ForwardState& state) const {
    Vector x(2 * num_vertices());
    x << state.T_s, state.T_f;
    return x;
}

Vector ForwardModel::mechanical_vector(const ForwardState& state) const {
    Vector full(3 * num_vertices());
    full << state.u_x, state.u_y, state.p;
    return mechanical_.restrict_to_free(full);
}

double ForwardModel::eval_QT(const ForwardState& state, const PorosityField& phi) const {
    return thermal_.objective(thermal_vector(state), phi.fluid());
}

double ForwardModel::eval_QM(const ForwardState& state) const {
    Vector u(2 * num_vertices());
    u << state.u_x, state.u_y;
    return 0.5 * u.dot(mechanical_.elasticity() * u) + mechanical_.traction_load().dot(u);
}

QoiValues ForwardModel::evaluate(const NodalField& d, const NodalField& m, ForwardState* state) const {
    const PorosityField phi = porosity_map(d, m);
    ForwardState s = solve(phi);
    QoiValues q;
    q.Q_T = eval_QT(s, phi);
    q.Q_M = eval_QM(s);
    q.Q = params_.beta_M * q.Q_M - q.Q_T;
    if (state) *state = std::move(s);
    return q;
}

double ForwardModel::eval_Q(const NodalField& d, const NodalField& m) const { return evaluate(d, m).Q; }

}  // namespace pduu
