"""Network modules: mixer monotonicity, coordinator reparameterization, and
analytic-vs-finite-difference gradients for each forward operation."""

import itertools

import numpy as np
import pytest
import torch

from icco.nets import AgentQNet, CoordinatorNet, MonotonicMixer, PosteriorNet

torch.set_num_threads(1)


def randomize_(module, rng, scale=0.6):
    for p in module.parameters():
        p.data = torch.tensor(rng.normal(0, scale, size=tuple(p.shape)), dtype=torch.float64)


def fd_grad_scalar(fn, tensor, h=1e-6):
    """Central finite differences of scalar fn w.r.t. every tensor entry."""
    grad = torch.zeros_like(tensor)
    flat = tensor.data.view(-1)
    gflat = grad.view(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + h
        hi = fn()
        flat[i] = orig - h
        lo = fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * h)
    return grad


def assert_grads_close(analytic, fd, rel=1e-4):
    num = (analytic - fd).norm().item()
    den = max(analytic.norm().item(), fd.norm().item(), 1e-8)
    assert num / den < rel, f"gradient mismatch: rel err {num / den:.3e}"


# -- monotonic mixer ----------------------------------------------------------


def test_mixer_monotone_under_random_draws():
    rng = np.random.default_rng(0)
    mixer = MonotonicMixer(n_agents=3, cond_dim=10, embed_dim=8, hypernet_embed=16).double()
    h = 1e-6
    for _ in range(1000):
        randomize_(mixer, rng, scale=1.0)
        qs = torch.tensor(rng.normal(0, 2, size=(1, 3)), dtype=torch.float64)
        cond = torch.tensor(rng.normal(0, 2, size=(1, 10)), dtype=torch.float64)
        with torch.no_grad():
            for i in range(3):
                up = qs.clone()
                up[0, i] += h
                down = qs.clone()
                down[0, i] -= h
                deriv = (mixer(up, cond) - mixer(down, cond)).item() / (2 * h)
                assert deriv >= -1e-6


def test_mixer_increasing_any_utility_never_decreases_output():
    rng = np.random.default_rng(1)
    mixer = MonotonicMixer(n_agents=3, cond_dim=6, embed_dim=8, hypernet_embed=16).double()
    for _ in range(200):
        randomize_(mixer, rng, scale=1.0)
        qs = torch.tensor(rng.normal(0, 1, size=(1, 3)), dtype=torch.float64)
        cond = torch.tensor(rng.normal(0, 1, size=(1, 6)), dtype=torch.float64)
        with torch.no_grad():
            base = mixer(qs, cond).item()
            for i in range(3):
                up = qs.clone()
                up[0, i] += 1.0
                assert mixer(up, cond).item() >= base - 1e-12


def test_joint_argmax_decomposes_into_per_agent_argmax():
    rng = np.random.default_rng(2)
    n_agents, n_actions = 3, 5
    mixer = MonotonicMixer(n_agents=n_agents, cond_dim=4, embed_dim=8, hypernet_embed=16).double()
    for trial in range(20):
        randomize_(mixer, rng, scale=1.0)
        utilities = torch.tensor(rng.normal(0, 1, size=(n_agents, n_actions)), dtype=torch.float64)
        cond = torch.tensor(rng.normal(0, 1, size=(1, 4)), dtype=torch.float64)
        best_joint, best_val = None, -np.inf
        with torch.no_grad():
            for joint in itertools.product(range(n_actions), repeat=n_agents):
                qs = torch.stack([utilities[i, joint[i]] for i in range(n_agents)]).view(1, -1)
                val = mixer(qs, cond).item()
                if val > best_val:
                    best_joint, best_val = joint, val
        per_agent = tuple(int(utilities[i].argmax()) for i in range(n_agents))
        assert best_joint == per_agent


def test_mixer_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    mixer = MonotonicMixer(n_agents=2, cond_dim=3, embed_dim=4, hypernet_embed=6).double()
    randomize_(mixer, rng)
    qs = torch.tensor(rng.normal(size=(4, 2)), dtype=torch.float64, requires_grad=True)
    cond = torch.tensor(rng.normal(size=(4, 3)), dtype=torch.float64)

    def loss_fn():
        with torch.no_grad():
            return (mixer(qs, cond) ** 2).sum().item()

    loss = (mixer(qs, cond) ** 2).sum()
    loss.backward()
    assert_grads_close(qs.grad, fd_grad_scalar(loss_fn, qs))
    for name, p in mixer.named_parameters():
        fd = fd_grad_scalar(loss_fn, p)
        assert_grads_close(p.grad, fd)


# -- coordinator ---------------------------------------------------------------


def make_coordinator():
    return CoordinatorNet(state_dim=6, instr_dim=4, n_agents=2, latent_dim=2, hidden_dim=8).double()


def test_coordinator_zero_noise_returns_mean():
    torch.manual_seed(0)
    net = make_coordinator()
    s = torch.randn(3, 6, dtype=torch.float64)
    v = torch.randn(3, 4, dtype=torch.float64)
    z, mean, var = net.sample(s, v, torch.zeros(3, 4, dtype=torch.float64))
    assert torch.equal(z, mean)
    assert torch.all(var > 0)


def test_coordinator_sample_moments():
    torch.manual_seed(1)
    net = make_coordinator()
    s = torch.randn(1, 6, dtype=torch.float64)
    v = torch.randn(1, 4, dtype=torch.float64)
    rng = np.random.default_rng(0)
    noise = torch.tensor(rng.standard_normal((100_000, 4)))
    z, mean, var = net.sample(s.expand(100_000, 6), v.expand(100_000, 4), noise)
    mc_tol = 3.0 * float(var[0].sqrt().max()) / np.sqrt(100_000)
    assert torch.allclose(z.mean(0), mean[0], atol=mc_tol)
    assert torch.allclose(z.var(0), var[0], rtol=0.03)


def test_coordinator_deterministic_given_inputs_and_noise():
    torch.manual_seed(2)
    net = make_coordinator()
    s = torch.randn(2, 6, dtype=torch.float64)
    v = torch.randn(2, 4, dtype=torch.float64)
    eps = torch.randn(2, 4, dtype=torch.float64)
    z1, _, _ = net.sample(s, v, eps)
    z2, _, _ = net.sample(s, v, eps)
    assert torch.equal(z1, z2)


def test_coordinator_noise_shape_mismatch_rejected():
    net = make_coordinator()
    s = torch.randn(1, 6, dtype=torch.float64)
    v = torch.randn(1, 4, dtype=torch.float64)
    with pytest.raises(ValueError):
        net.sample(s, v, torch.zeros(1, 3, dtype=torch.float64))


def test_reparameterization_gradient_structure():
    # with frozen noise, d z_i / d mean_j = delta_ij and the gradient of the
    # empirical variance w.r.t. the variance equals the noise sample variance
    torch.manual_seed(3)
    mean = torch.randn(3, dtype=torch.float64, requires_grad=True)
    var = torch.rand(3, dtype=torch.float64).add_(0.1).requires_grad_(True)
    noise = torch.randn(64, 3, dtype=torch.float64)
    z = mean + torch.sqrt(var) * noise
    jac = torch.zeros(3, 3, dtype=torch.float64)
    for i in range(3):
        g = torch.autograd.grad(z.mean(0)[i], mean, retain_graph=True)[0]
        jac[i] = g
    assert torch.allclose(jac, torch.eye(3, dtype=torch.float64))

    emp_var = z.var(0, unbiased=False).sum()
    g_var = torch.autograd.grad(emp_var, var)[0]
    assert torch.allclose(g_var, noise.var(0, unbiased=False), rtol=1e-10)


def test_coordinator_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    net = make_coordinator()
    randomize_(net, rng)
    s = torch.tensor(rng.normal(size=(3, 6)), dtype=torch.float64)
    v = torch.tensor(rng.normal(size=(3, 4)), dtype=torch.float64)
    eps = torch.tensor(rng.normal(size=(3, 4)), dtype=torch.float64)

    def loss_fn():
        with torch.no_grad():
            z, mean, var = net.sample(s, v, eps)
            return (z**2).sum().item() + var.sum().item()

    z, mean, var = net.sample(s, v, eps)
    loss = (z**2).sum() + var.sum()
    loss.backward()
    for name, p in net.named_parameters():
        assert_grads_close(p.grad, fd_grad_scalar(loss_fn, p))


# -- recurrent utility net ------------------------------------------------------


def test_agent_net_shapes_and_hidden_reset():
    net = AgentQNet(input_dim=7, hidden_dim=8, n_actions=5)
    h0 = net.init_hidden(4)
    assert h0.shape == (1, 4, 8)
    assert torch.all(h0 == 0)
    x = torch.randn(4, 6, 7)
    q, h = net(x, h0)
    assert q.shape == (4, 6, 5)
    assert h.shape == (1, 4, 8)


def test_agent_net_stepwise_equals_sequence():
    torch.manual_seed(4)
    net = AgentQNet(input_dim=5, hidden_dim=8, n_actions=3).double()
    x = torch.randn(2, 7, 5, dtype=torch.float64)
    q_seq, _ = net(x, net.init_hidden(2))
    h = net.init_hidden(2)
    qs = []
    for t in range(7):
        q, h = net(x[:, t : t + 1], h)
        qs.append(q)
    q_step = torch.cat(qs, dim=1)
    assert torch.allclose(q_seq, q_step, atol=1e-12)


def test_agent_net_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    net = AgentQNet(input_dim=4, hidden_dim=6, n_actions=3).double()
    randomize_(net, rng)
    x = torch.tensor(rng.normal(size=(2, 5, 4)), dtype=torch.float64)

    def loss_fn():
        with torch.no_grad():
            q, _ = net(x, net.init_hidden(2))
            return (q**2).sum().item()

    q, _ = net(x, net.init_hidden(2))
    (q**2).sum().backward()
    for name, p in net.named_parameters():
        assert_grads_close(p.grad, fd_grad_scalar(loss_fn, p))


# -- posterior factors -----------------------------------------------------------


def test_posterior_factor_shapes_and_positive_variance():
    torch.manual_seed(5)
    net = PosteriorNet(
        state_dim=6, joint_obs_dim=8, joint_act_dim=4, instr_dim=4, out_dim=4, hidden_dim=8
    ).double()
    s = torch.randn(3, 6, dtype=torch.float64)
    a = torch.randn(3, 4, dtype=torch.float64)
    v = torch.randn(3, 4, dtype=torch.float64)
    o = torch.randn(3, 8, dtype=torch.float64)
    m0, v0 = net.state_factor(s, a, v)
    ms, vs = net.step_factor(o, a, v)
    assert m0.shape == (3, 4) and ms.shape == (3, 4)
    assert torch.all(v0 >= 1e-4) and torch.all(vs >= 1e-4)


def test_posterior_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    net = PosteriorNet(
        state_dim=3, joint_obs_dim=4, joint_act_dim=2, instr_dim=2, out_dim=2, hidden_dim=6
    ).double()
    randomize_(net, rng)
    s = torch.tensor(rng.normal(size=(2, 3)), dtype=torch.float64)
    a = torch.tensor(rng.normal(size=(2, 2)), dtype=torch.float64)
    v = torch.tensor(rng.normal(size=(2, 2)), dtype=torch.float64)
    o = torch.tensor(rng.normal(size=(2, 4)), dtype=torch.float64)

    def loss_fn():
        with torch.no_grad():
            m0, v0 = net.state_factor(s, a, v)
            ms, vs = net.step_factor(o, a, v)
            return (m0**2).sum().item() + v0.sum().item() + (ms**2).sum().item() + vs.sum().item()

    m0, v0 = net.state_factor(s, a, v)
    ms, vs = net.step_factor(o, a, v)
    ((m0**2).sum() + v0.sum() + (ms**2).sum() + vs.sum()).backward()
    for name, p in net.named_parameters():
        assert_grads_close(p.grad, fd_grad_scalar(loss_fn, p))
