//! Full-model finite-difference gradient check in 64-bit.

use mrx_autodiff::gradcheck::{central_diff, max_rel_err};
use mrx_autodiff::Graph;
use mrx_chansim::rng::stream;
use mrx_chansim::scenario::{sample_scenario, ScenarioConfig};
use mrx_chansim::tdl::TdlParams;
use mrx_chansim::MultiApObservation;
use mrx_neural::model::data_rows;
use mrx_neural::{tokenize, Model, ModelConfig};
use mrx_phy::{ConstellationSpec, FrameFormat, PilotMask};

fn micro_obs() -> (MultiApObservation, PilotMask) {
    let mask = PilotMask::columns(4, 4, &[1]).unwrap();
    let code = mrx_phy::ldpc::generate_qc(3, 6, 4, 3).unwrap();
    let fmt = FrameFormat::new(&mask, code, ConstellationSpec::square_qam(2).unwrap()).unwrap();
    let scfg = ScenarioConfig {
        n_ap: 2,
        target_avg_ebn0_db: 8.0,
        ..Default::default()
    };
    let mut rng = stream(55, &[]);
    let scn = sample_scenario(&scfg, 1.5, &mut rng).unwrap();
    let obs = mrx_chansim::make_observation(&scn, &TdlParams::default(), &mask, &fmt, &mut rng)
        .unwrap();
    (obs, mask)
}

#[test]
fn full_model_gradient_matches_finite_differences() {
    let cfg = ModelConfig {
        d_model: 8,
        heads: 2,
        layers: 1,
        ff: 8,
        m: 2,
        max_n_r: 2,
        n_c: 4,
        n_s: 4,
        sigma2_scale: 1.0,
        sigma2_shift: 0.0,
    };
    let model = Model::<f64>::new(cfg, 17).unwrap();
    let (obs, mask) = micro_obs();
    let rows = data_rows(&mask);
    let tokens = tokenize(&obs, &cfg).unwrap();

    // analytic gradient through the tape
    let mut g = Graph::new();
    let (logits, gp) = model.build_forward(&mut g, &tokens, &rows, true).unwrap();
    let loss_id = model.bmd_loss_graph(&mut g, logits, &obs.coded_bits).unwrap();
    g.backward(loss_id).unwrap();
    let analytic: Vec<f64> = gp
        .ids
        .iter()
        .flat_map(|&id| g.grad(id).iter().copied().collect::<Vec<_>>())
        .collect();
    assert_eq!(analytic.len(), model.n_params());

    // numeric gradient by central differences over every parameter
    let x0 = model.flatten();
    let f = |x: &[f64]| -> f64 {
        let mut m = model.clone();
        m.unflatten(x).unwrap();
        let mut g = Graph::new();
        let (logits, _) = m.build_forward(&mut g, &tokens, &rows, false).unwrap();
        let loss = m.bmd_loss_graph(&mut g, logits, &obs.coded_bits).unwrap();
        g.data(loss)[0]
    };
    let numeric = central_diff(&f, &x0, 1e-5);
    let err = max_rel_err(&analytic, &numeric, 1e-8);
    assert!(err < 1e-4, "max relative gradient error {err}");
}
