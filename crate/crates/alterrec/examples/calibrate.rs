// temporary calibration harness for the synthetic-scale acceptance criteria
use std::sync::Arc;
use std::time::Instant;

use alterrec::baselines::{train_independent, train_nfrec, FusionMode};
use alterrec::corpus::{generate_synthetic, SyntheticSpec};
use alterrec::encoders::SessionEncoderKind;
use alterrec::scoring::Modality;
use alterrec::training::{
    blended_metrics, run_alternating, single_metrics, AlternatingVariant, MiningCachePolicy,
    TrainConfig,
};

fn corpus_spec(id_signal: f64, text_info: f64, feature_dim: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        num_items: 500,
        num_clusters: 20,
        train_sessions: 5000,
        val_sessions: 500,
        test_sessions: 1000,
        min_len: 2,
        max_len: 8,
        id_signal,
        text_informativeness: text_info,
        feature_dim,
        seed,
    }
}

fn desk_config(seed: u64, m_max: usize) -> TrainConfig {
    TrainConfig {
        m_random: 2,
        m_gap: 2,
        m_max,
        k1: 26,
        k2: 125,
        p: 5,
        alpha: 0.5,
        beta: 0.5,
        d: 16,
        d_h: 32,
        l_max: 10,
        layers: 1,
        transformer_ffn: false,
        learning_rate: 0.01,
        dropout: 0.0,
        batch_size: 64,
        seed,
    }
}

fn probe_c7() {
    for (epochs, lr, fdim) in [
        (1usize, 0.003f64, 32usize),
        (1, 0.002, 32),
        (1, 0.003, 24),
    ] {
        for t_info in [0.0, 1.0] {
            let mut hits_all = Vec::new();
            for seed in [1u64, 2, 3] {
                let (ds, f) = generate_synthetic(&corpus_spec(0.9, t_info, fdim, seed)).unwrap();
                let mut config = desk_config(seed, epochs);
                config.m_random = 0;
                config.learning_rate = lr;
                let run = train_independent(
                    Modality::Text,
                    &ds,
                    Some(Arc::new(f)),
                    &config,
                    SessionEncoderKind::Mean,
                )
                .unwrap();
                let (hits, _) = single_metrics(&run.net, &ds.test).unwrap();
                hits_all.push(hits);
            }
            let mean = hits_all.iter().sum::<f64>() / 3.0;
            println!(
                "C7 probe epochs={epochs} lr={lr} fdim={fdim} t={t_info}: hits {hits_all:?} mean={mean:.4}"
            );
        }
    }
}

fn main() {
    let t0 = Instant::now();
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if which == "c7" || which == "all" {
        probe_c7();
    }

    if which == "c8" || which == "all" {
        for seed in [1u64, 2, 3] {
            let t = Instant::now();
            let (ds, f) = generate_synthetic(&corpus_spec(0.9, 0.2, 64, seed)).unwrap();
            let run =
                train_nfrec(&ds, Arc::new(f), &desk_config(seed, 8), FusionMode::Concat).unwrap();
            let last = run.diagnostics.last().unwrap();
            println!(
                "C8 nfrec seed={seed}: hits full={:.4} id={:.4} text={:.4} | loss full={:.4} id={:.4} text={:.4} | id_closer={} loss_within_10pct={}  ({:.1}s)",
                last.hits20_full, last.hits20_id, last.hits20_text,
                last.loss_full, last.loss_id, last.loss_text,
                (last.hits20_full - last.hits20_id).abs() < (last.hits20_full - last.hits20_text).abs(),
                (last.loss_id - last.loss_full).abs() <= 0.1 * last.loss_full,
                t.elapsed().as_secs_f64()
            );
        }
    }

    if which == "c9" || which == "all" {
        let k2: usize = std::env::args().nth(2).map(|v| v.parse().unwrap()).unwrap_or(125);
        let m_max: usize = std::env::args().nth(3).map(|v| v.parse().unwrap()).unwrap_or(12);
        let lr: f64 = std::env::args().nth(4).map(|v| v.parse().unwrap()).unwrap_or(0.01);
        println!("C9 scan: k2={k2} m_max={m_max} lr={lr}");
        let mut sums = [0.0f64; 4];
        for seed in [1u64, 2, 3] {
            let t = Instant::now();
            let (ds, f) = generate_synthetic(&corpus_spec(0.7, 0.7, 64, seed)).unwrap();
            let f = Arc::new(f);
            let mut config = desk_config(seed, m_max);
            config.k2 = k2;
            config.learning_rate = lr;
            let alter = run_alternating(
                &ds, f.clone(), &config,
                SessionEncoderKind::Mean, SessionEncoderKind::Mean,
                AlternatingVariant::Standard, MiningCachePolicy::PerBatch,
            )
            .unwrap();
            let (mut a_id, mut a_text) = (alter.id_net, alter.text_net);
            alterrec::training::restore_params(&mut a_id, "id.", &alter.best_snapshot).unwrap();
            alterrec::training::restore_params(&mut a_text, "text.", &alter.best_snapshot).unwrap();
            let (h_alter, _) = blended_metrics(&a_id, &a_text, 0.5, &ds.test).unwrap();
            let random = run_alternating(
                &ds, f.clone(), &config,
                SessionEncoderKind::Mean, SessionEncoderKind::Mean,
                AlternatingVariant::RandomNegatives, MiningCachePolicy::PerBatch,
            )
            .unwrap();
            let (mut r_id, mut r_text) = (random.id_net, random.text_net);
            alterrec::training::restore_params(&mut r_id, "id.", &random.best_snapshot).unwrap();
            alterrec::training::restore_params(&mut r_text, "text.", &random.best_snapshot).unwrap();
            let (h_random, _) = blended_metrics(&r_id, &r_text, 0.5, &ds.test).unwrap();
            let id_run =
                train_independent(Modality::Id, &ds, None, &config, SessionEncoderKind::Mean)
                    .unwrap();
            let mut id_net = id_run.net;
            alterrec::training::restore_params(&mut id_net, "id.", &id_run.best_snapshot).unwrap();
            let (h_id, _) = single_metrics(&id_net, &ds.test).unwrap();
            let text_run = train_independent(
                Modality::Text, &ds, Some(f), &config, SessionEncoderKind::Mean,
            )
            .unwrap();
            let mut text_net = text_run.net;
            alterrec::training::restore_params(&mut text_net, "text.", &text_run.best_snapshot).unwrap();
            let (h_text, _) = single_metrics(&text_net, &ds.test).unwrap();
            println!(
                "C9 seed={seed}: alter={h_alter:.4} random={h_random:.4} id={h_id:.4} text={h_text:.4}  ({:.1}s)",
                t.elapsed().as_secs_f64()
            );
            sums[0] += h_alter;
            sums[1] += h_random;
            sums[2] += h_id;
            sums[3] += h_text;
        }
        println!(
            "C9 means: alter={:.4} random={:.4} id={:.4} text={:.4}",
            sums[0] / 3.0, sums[1] / 3.0, sums[2] / 3.0, sums[3] / 3.0
        );
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
