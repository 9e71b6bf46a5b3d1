use log::{info, warn};
use twin_core::{Catalog, NormalizationStats};
use twin_forecast::{
    finetune, prepare, prepare_split, pretrain_persistence, train, Dataset, ForecastModel, ForecastTask, ModelKind,
    PretrainConfig, Topology, TrainConfig,
};

use crate::cli::TrainArgs;
use crate::error::{CliError, Result};

fn topology(args: &TrainArgs, task: &ForecastTask) -> Result<Topology> {
    let shape = task.shape();
    Ok(match (args.kind, args.hidden.as_slice()) {
        (ModelKind::Dnn, []) => Topology::default_dnn(shape),
        (ModelKind::Dnn, widths) => Topology::dnn(shape, widths),
        (ModelKind::Lstm, []) => Topology::default_lstm(shape),
        (ModelKind::Lstm, [hidden, dense]) => Topology::lstm(shape, *hidden, *dense),
        (ModelKind::Lstm, _) => return Err(CliError::Usage("an LSTM takes --hidden HIDDEN,DENSE".into())),
        (ModelKind::Persistence, _) => unreachable!("handled by the caller"),
    })
}

fn datasets(args: &TrainArgs, task: &ForecastTask) -> Result<(Dataset, NormalizationStats)> {
    let catalog = Catalog::builtin();
    let store = super::load_store(&catalog, &args.data)?;
    if args.split >= 1.0 {
        let (first, last) = store.time_span().ok_or_else(|| CliError::Data(format!("{} holds no records", args.data.display())))?;
        let prepared = prepare(&store, task, first, last, None)?;
        Ok((prepared.dataset, prepared.norm))
    } else {
        let (train, _, norm) = prepare_split(&store, task, args.split)?;
        Ok((train, norm))
    }
}

pub fn run(args: &TrainArgs, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let task = super::task(&Catalog::builtin(), &args.task)?;
    if args.kind == ModelKind::Persistence {
        ForecastModel::persistence(task).save(&args.out)?;
        println!("wrote persistence model to {}", args.out.display());
        return Ok(());
    }
    let topology = topology(args, &task)?;
    let config = TrainConfig {
        batch_size: args.batch_size,
        validation_fraction: args.validation,
        max_epochs: args.epochs,
        patience: args.patience,
        learning_rate: args.learning_rate,
        seed,
        max_samples_per_epoch: args.max_samples_per_epoch,
    };
    config.validate()?;
    let (data, norm) = datasets(args, &task)?;
    info!("{task}: {} training instants", data.instants().len());

    let start = if args.pretrain {
        let pretrain = PretrainConfig {
            batch_size: args.batch_size,
            learning_rate: args.pretrain_learning_rate,
            final_learning_rate: Some(args.pretrain_final_learning_rate),
            eval_every: args.pretrain_eval_every,
            seed,
            ..PretrainConfig::default()
        };
        let outcome = pretrain_persistence(task.clone(), topology, args.pretrain_samples, args.pretrain_threshold, &pretrain)?;
        println!(
            "pretrain\tsamples {}\tnrmse {:.6}\t{}",
            outcome.samples,
            outcome.nrmse,
            if outcome.converged { "converged" } else { "not converged" }
        );
        if !outcome.converged {
            warn!("persistence emulation stopped above {} after {} samples", args.pretrain_threshold, outcome.samples);
        }
        outcome.model
    } else {
        ForecastModel::network(task, topology, seed)?
    };
    let mut start = start;
    start.norm = Some(norm);
    let model = if args.pretrain { finetune(&start, &data, &config)? } else { train(&start, &data, &config)? };

    println!("epoch\ttrain_loss\tvalidation_nrmse\tbest_so_far");
    for (e, best) in model.history.epochs.iter().zip(model.history.best_so_far()) {
        println!("{}\t{:.6}\t{:.6}\t{:.6}", e.epoch, e.train_loss, e.validation_nrmse, best);
    }
    model.save(&args.out)?;
    println!("wrote {} model to {}", model.label(), args.out.display());
    if let Some(path) = &args.history {
        let json = serde_json::to_string_pretty(&model.history).expect("history serializes");
        std::fs::write(path, json)?;
    }
    Ok(())
}
