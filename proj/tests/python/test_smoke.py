"""Smoke tests for the python bindings: the main operations round-trip."""


def test_model_dimensions(model):
    assert model.bus_count == 30
    assert model.input_dim == 30
    assert model.subsystem_count == 6
    assert model.coupling_dim == 18
    assert model.max_degree() == 4
    names = [s.name for s in model.subsystems]
    v = model.subsystems[names.index("V")]
    assert v.coupling_buses == [2, 4, 5]


def test_steady_state_is_quiet(swingid, model):
    u, warnings = swingid.steady_state_input(model)
    assert len(u) == 30
    assert warnings == []
    traj = swingid.simulate(model, steps=50)
    worst = max(abs(w) for p in traj.points for w in p.state.omega)
    assert worst < 1e-9


def test_attack_shows_up_and_detects(swingid, model):
    traj = swingid.simulate(model, steps=3, schedule={1: [(2, -0.2)]})
    assert max(abs(d) for d in traj.points[2].dz) > 1e-6
    per_sub = []
    offset = 0
    for sub in model.subsystems:
        n = len(sub.coupling_buses)
        per_sub.append(list(traj.points[2].dz[offset:offset + n]))
        offset += n
    verdict = swingid.detect(per_sub, 1e-5)
    assert verdict.alarm


def test_solver_identity_case(swingid):
    system = swingid.AssembledSystem([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.5])
    result = swingid.solve_l0_equality(system)
    assert result.feasible
    assert result.cardinality == 1
    assert result.support == [2]
    assert swingid.extract_support(result.delta_a, 1e-5) == [2]


def test_one_shot_pipeline(swingid, model):
    shot = swingid.check_attack(model, [(2, -0.25)], curvature_samples=20)
    assert shot.verdict.alarm
    assert 2 in shot.identified_support
    assert shot.report.superset_condition in ("met", "not_met")
    assert shot.report.delta_tilde <= shot.report.delta


def test_short_series_zero_cells_and_determinism(swingid, model):
    a = swingid.run_series(model, "attack_1", seed=5, steps=15, curvature_samples=20)
    b = swingid.run_series(model, "attack_1", seed=5, steps=15, curvature_samples=20)
    assert a.records_csv() == b.records_csv()
    assert a.detected_count > 0
    assert a.superset_table.met_wrong == 0
    assert a.exact_table.met_wrong == 0
    for rec in a.records:
        if rec.cond_superset_met:
            assert rec.superset_correct
        if rec.cond_exact_met:
            assert rec.exact_correct
