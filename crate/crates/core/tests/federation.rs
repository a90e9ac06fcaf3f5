use fedadas::data::{
    build_public_dataset, generate_synthetic, partition_non_iid, select_round_batch, ClientPartition, LabeledDataset, RoundBatch,
    ShiftTag,
};
use fedadas::federation::{
    comm_cost, fedadas_client_round_bytes, fedavg_aggregate, init_clients, run_fedadas, run_fedavg, run_local_only, ClientState,
    CostQuery, Direction, PayloadKind, Producer, ProtocolConfig, SoftLabelMatrix,
};
use fedadas::metrics::accuracy;
use fedadas::nn::{softmax, Model, ModelSpec};
use fedadas::rng::derive_seed;

fn separable(seed: u64) -> LabeledDataset {
    generate_synthetic(2, 2, 100, seed, 10.0).unwrap()
}

fn whole(data: &LabeledDataset, id: usize) -> ClientPartition {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|i| i % 5 == 4);
    ClientPartition {
        client_id: id,
        train: data.subset(&train),
        test: data.subset(&test),
        shift: ShiftTag::default(),
    }
}

fn client(data: &LabeledDataset, spec: ModelSpec, cfg: &ProtocolConfig) -> ClientState {
    ClientState::new(whole(data, 0), spec, cfg).unwrap()
}

#[test]
fn zero_epochs_changes_nothing() {
    let cfg = ProtocolConfig::default();
    let mut c = client(&separable(1), ModelSpec::new(2, vec![4], 2), &cfg);
    let before = c.model.parameters().to_vec();
    assert!(c.local_train(0, 32).unwrap().is_empty());
    assert_eq!(c.scheduler.epochs_seen, 0);
    assert_eq!(c.model.parameters(), &before[..]);
}

#[test]
fn thirty_epochs_fit_a_separable_shard() {
    let cfg = ProtocolConfig {
        learning_rate: 0.01,
        ..Default::default()
    };
    let data = generate_synthetic(2, 2, 500, 2, 10.0).unwrap();
    let mut c = client(&data, ModelSpec::new(2, vec![], 2), &cfg);
    c.local_train(30, 32).unwrap();
    let acc = accuracy(&c.model, &c.partition.train).unwrap();
    assert!(acc >= 99.0, "{acc}");
}

#[test]
fn early_losses_do_not_increase() {
    let cfg = ProtocolConfig::default();
    let mut c = client(&separable(3), ModelSpec::new(2, vec![], 2), &cfg);
    let losses = c.local_train(5, 32).unwrap();
    for w in losses.windows(2) {
        assert!(w[1] <= w[0], "{losses:?}");
    }
}

fn batch_for(data: &LabeledDataset, round: usize) -> RoundBatch {
    let parts = partition_non_iid(data, 2, 1.0, 0.2, 5).unwrap();
    let public = build_public_dataset(&parts, 1.0, 5).unwrap();
    select_round_batch(&public, 40, round, 5).unwrap()
}

#[test]
fn soft_labels_compose_softmax_and_forward() {
    let data = separable(4);
    let c = client(&data, ModelSpec::new(2, vec![6], 2), &ProtocolConfig::default());
    let batch = batch_for(&data, 1);
    for tau in [0.5, 1.0, 3.0] {
        let got = c.produce_soft_labels(&batch, tau).unwrap();
        let want = softmax(&c.model.forward(batch.features.view()).unwrap(), tau).unwrap();
        for (a, b) in got.probabilities().iter().zip(want.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(got, c.produce_soft_labels(&batch, tau).unwrap());
    }
}

#[test]
fn zero_model_gives_uniform_soft_labels() {
    let data = separable(4);
    let spec = ModelSpec::new(2, vec![3], 2);
    let mut c = client(&data, spec.clone(), &ProtocolConfig::default());
    c.model = Model::from_parameters(spec.clone(), vec![0.0; spec.parameter_count()]).unwrap();
    let p = c.produce_soft_labels(&batch_for(&data, 1), 1.0).unwrap();
    assert!(p.probabilities().iter().all(|&v| v == 0.5));
}

#[test]
fn self_distillation_is_a_fixed_point() {
    let data = separable(6);
    let mut c = client(&data, ModelSpec::new(2, vec![5], 2), &ProtocolConfig::default());
    c.local_train(3, 32).unwrap();
    let batch = batch_for(&data, 1);
    let own = c.produce_soft_labels(&batch, 2.0).unwrap();
    let ensemble = SoftLabelMatrix::new(1, Producer::Ensemble, own.probabilities().to_owned()).unwrap();
    let before = c.model.parameters().to_vec();
    let losses = c.distill(&batch, &ensemble, 1, 2.0, batch.len()).unwrap();
    assert!(losses[0].abs() < 1e-9, "{losses:?}");
    let moved: f64 = c
        .model
        .parameters()
        .iter()
        .zip(&before)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(moved < 1e-6, "{moved}");
    assert!(c.distill(&batch, &ensemble, 0, 2.0, 8).unwrap().is_empty());
    assert_eq!(c.model.parameters().len(), before.len());
}

#[test]
fn student_learns_from_a_stronger_teacher() {
    // Four classes on axes; the teacher sees labels, the student only the
    // teacher's soft labels on a public batch whose labels stay hidden.
    let data = generate_synthetic(4, 4, 150, 7, 6.0).unwrap();
    let cfg = ProtocolConfig {
        learning_rate: 0.01,
        ..Default::default()
    };
    let mut teacher = ClientState::new(whole(&data, 0), ModelSpec::new(4, vec![32, 32], 4), &cfg).unwrap();
    teacher.local_train(30, 32).unwrap();

    let rows: Vec<usize> = (0..data.len()).step_by(2).collect();
    let public_labels = data.subset(&rows);
    let batch = RoundBatch {
        round: 1,
        indices: (0..rows.len()).collect(),
        features: public_labels.features().to_owned(),
    };
    let soft = teacher.produce_soft_labels(&batch, 1.0).unwrap();
    let ensemble = SoftLabelMatrix::new(1, Producer::Ensemble, soft.probabilities().to_owned()).unwrap();

    let mut student = ClientState::new(whole(&data, 1), ModelSpec::new(4, vec![], 4), &cfg).unwrap();
    let before = accuracy(&student.model, &public_labels).unwrap();
    student.distill(&batch, &ensemble, 10, 1.0, 32).unwrap();
    let after = accuracy(&student.model, &public_labels).unwrap();
    assert!(after > before, "{before} -> {after}");
}

fn fleet(n: usize, seed: u64) -> (Vec<ClientPartition>, fedadas::data::PublicDataset) {
    let data = generate_synthetic(3, 4, 120, seed, 4.0).unwrap();
    let parts = partition_non_iid(&data, n, 1.0, 0.2, seed).unwrap();
    let public = build_public_dataset(&parts, 0.2, seed).unwrap();
    (parts, public)
}

fn mixed_specs(n: usize) -> Vec<ModelSpec> {
    (0..n)
        .map(|i| match i % 3 {
            0 => ModelSpec::new(4, vec![], 3),
            1 => ModelSpec::new(4, vec![8], 3),
            _ => ModelSpec::new(4, vec![16, 8], 3),
        })
        .collect()
}

#[test]
fn zero_rounds_leave_initial_models() {
    let (parts, public) = fleet(3, 8);
    let cfg = ProtocolConfig {
        rounds: 0,
        ..Default::default()
    };
    let specs = mixed_specs(3);
    let out = run_fedadas(&cfg, &parts, &public, &specs).unwrap();
    let fresh = init_clients(&cfg, &parts, &specs).unwrap();
    assert!(out.ledger.is_empty() && out.rounds.is_empty());
    for (a, b) in out.clients.iter().zip(&fresh) {
        assert_eq!(a.model.parameters(), b.model.parameters());
    }
}

#[test]
fn heterogeneous_fleet_runs_and_ledger_is_conserved() {
    let (parts, public) = fleet(5, 9);
    let cfg = ProtocolConfig {
        rounds: 3,
        e_distill: 2,
        public_batch_size: 30,
        ..Default::default()
    };
    let out = run_fedadas(&cfg, &parts, &public, &mixed_specs(5)).unwrap();
    let (up, ens, idx) = fedadas_client_round_bytes(30, 3);
    assert_eq!(out.ledger.total_bytes(), 3 * 5 * (up + ens + idx));
    assert_eq!(comm_cost(&out.ledger, &CostQuery::all().payload(PayloadKind::Parameters)), 0);
    assert_eq!(comm_cost(&out.ledger, &CostQuery::all().direction(Direction::Up)), 3 * 5 * up);
    for r in &out.rounds {
        assert!(r.ensemble_digest.is_some());
        assert_eq!(r.bytes_up, 5 * up);
        assert!(r.clients.iter().all(|c| c.kd_losses.len() == 2));
    }
}

#[test]
fn identical_clients_agree_with_the_ensemble() {
    let data = generate_synthetic(2, 2, 60, 10, 4.0).unwrap();
    let a = whole(&data, 0);
    let b = ClientPartition { client_id: 1, ..a.clone() };
    let public = build_public_dataset(&[a.clone(), b.clone()], 0.5, 10).unwrap();
    let cfg = ProtocolConfig {
        rounds: 1,
        public_batch_size: 20,
        ..Default::default()
    };
    // Same spec and the same init seed for both, so every step matches.
    let spec = ModelSpec::new(2, vec![4], 2);
    let mut clients: Vec<ClientState> = [a, b].into_iter().map(|p| ClientState::new(p, spec.clone(), &cfg).unwrap()).collect();
    let theta = clients[0].model.parameters().to_vec();
    clients[1].model.set_parameters(&theta).unwrap();
    let batch = select_round_batch(&public, 20, 1, cfg.master_seed).unwrap();
    let labels: Vec<SoftLabelMatrix> = clients.iter().map(|c| c.produce_soft_labels(&batch, 1.0).unwrap()).collect();
    let ensemble = fedadas::federation::aggregate_soft_labels(&labels).unwrap();
    for l in &labels {
        for (x, y) in l.probabilities().iter().zip(ensemble.probabilities().iter()) {
            assert!((x - y).abs() <= 1e-15);
        }
    }
}

#[test]
fn fedavg_of_untrained_equal_clients_is_mean_of_inits() {
    let data = generate_synthetic(2, 3, 50, 11, 3.0).unwrap();
    let rows: Vec<usize> = (0..data.len()).collect();
    let parts: Vec<ClientPartition> = (0..3)
        .map(|i| ClientPartition {
            client_id: i,
            train: data.subset(&rows[i * 30..i * 30 + 20]),
            test: data.subset(&rows[i * 30 + 20..i * 30 + 30]),
            shift: ShiftTag::default(),
        })
        .collect();
    let cfg = ProtocolConfig {
        rounds: 1,
        e_local: 0,
        ..Default::default()
    };
    let spec = ModelSpec::new(3, vec![4], 2);
    let specs = vec![spec.clone(); 3];
    let inits: Vec<Model> = (0..3)
        .map(|i| Model::init(spec.clone(), derive_seed(cfg.master_seed, "model-init", &[i])).unwrap())
        .collect();
    let out = run_fedavg(&cfg, &parts, &specs).unwrap();
    for j in 0..spec.parameter_count() {
        let mean = inits.iter().map(|m| m.parameters()[j]).sum::<f64>() / 3.0;
        for c in &out.clients {
            assert!((c.model.parameters()[j] - mean).abs() < 1e-15);
        }
    }
}

#[test]
fn weighted_mean_of_three_clients() {
    let thetas = [vec![1.0, -2.0, 0.5], vec![3.0, 0.25, -1.0], vec![-0.5, 4.0, 2.0]];
    let sizes = [10, 20, 30];
    let refs: Vec<&[f64]> = thetas.iter().map(Vec::as_slice).collect();
    let got = fedavg_aggregate(&refs, &sizes).unwrap();
    for j in 0..3 {
        let direct = 10.0 / 60.0 * thetas[0][j] + 20.0 / 60.0 * thetas[1][j] + 30.0 / 60.0 * thetas[2][j];
        assert!((got[j] - direct).abs() <= 1e-12);
    }
}

#[test]
fn fedavg_rejects_mixed_architectures() {
    let (parts, _) = fleet(3, 12);
    let err = run_fedavg(&ProtocolConfig::default(), &parts, &mixed_specs(3)).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("FedAvg requires homogeneous architectures"));
}

#[test]
fn local_only_sends_nothing() {
    let (parts, _) = fleet(3, 13);
    let cfg = ProtocolConfig {
        rounds: 2,
        ..Default::default()
    };
    let out = run_local_only(&cfg, &parts, &mixed_specs(3)).unwrap();
    assert!(out.ledger.is_empty());
    assert_eq!(out.rounds.len(), 2);
}

#[test]
fn parallel_and_sequential_runs_are_bit_identical() {
    let (parts, public) = fleet(6, 14);
    let base = ProtocolConfig {
        rounds: 3,
        public_batch_size: 40,
        ..Default::default()
    };
    let seq = run_fedadas(&base, &parts, &public, &mixed_specs(6)).unwrap();
    let par = run_fedadas(
        &ProtocolConfig {
            parallelism: 4,
            ..base.clone()
        },
        &parts,
        &public,
        &mixed_specs(6),
    )
    .unwrap();
    let timeless = |rs: &[fedadas::federation::RoundRecord]| {
        rs.iter()
            .map(|r| fedadas::federation::RoundRecord {
                wall_clock: Default::default(),
                ..r.clone()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(timeless(&seq.rounds), timeless(&par.rounds));
    for (a, b) in seq.clients.iter().zip(&par.clients) {
        let bits = |m: &Model| m.parameters().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.model), bits(&b.model));
    }
}

#[test]
fn failures_carry_round_and_client() {
    let (parts, public) = fleet(3, 15);
    // An absurd learning rate overflows the weights during local training.
    let cfg = ProtocolConfig {
        rounds: 1,
        public_batch_size: 10,
        learning_rate: 1e300,
        ..Default::default()
    };
    let msg = run_fedadas(&cfg, &parts, &public, &mixed_specs(3)).unwrap_err().to_string();
    assert!(msg.contains("round 1"), "{msg}");
    assert!(msg.contains("client"), "{msg}");
}
