use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mfd_core::classifier::{cross_validate, train, CvReport, SvmModel};
use mfd_core::config::RunConfig;
use mfd_core::edt::{brute_force_edt, max_sqdist_bound, squared_edt};
use mfd_core::pipeline::{
    curves_of_volume, dataset_from_signatures, format_manifest, read_manifest, signatures,
    write_manifest, CurveCache, ManifestEntry,
};
use mfd_core::signature::{mfd_signature, SignatureParams};
use mfd_core::synth::{generate, motion_benchmark, SynthKind, SynthParams, SynthSpec};
use mfd_core::volume::{load_input, save_volume, VideoVolume};
use mfd_core::{par, Error, Execution, Result};

use crate::{Command, Format, SynthArgs};

pub fn run(command: Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Ingest { input, output } => ingest(&input, &output, cfg),
        Command::Synth(args) => synth(&args, cfg),
        Command::Signature {
            inputs,
            out_dir,
            format,
            emit_curves,
        } => signature(&inputs, out_dir.as_deref(), format, emit_curves, cfg),
        Command::Crossval {
            manifest,
            report,
            json,
        } => crossval(&manifest, report.as_deref(), json, cfg),
        Command::Train { manifest, output } => train_cmd(&manifest, &output, cfg),
        Command::Predict {
            model,
            inputs,
            output,
        } => predict(&model, &inputs, output.as_deref(), cfg),
        Command::Sweep {
            manifest,
            sigmas,
            r_maxes,
            output,
        } => sweep(&manifest, &sigmas.0, &r_maxes.0, output.as_deref(), cfg),
        Command::EdtVerify { input, dump } => edt_verify(&input, dump.as_deref(), cfg),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn load(path: &Path, cfg: &RunConfig) -> Result<VideoVolume> {
    load_input(path, cfg.binarize_threshold, Execution::default())
}

fn ingest(input: &Path, output: &Path, cfg: &RunConfig) -> Result<()> {
    let vol = load(input, cfg)?;
    save_volume(&vol, output)?;
    let (w, h, d) = vol.dims();
    println!("{w}x{h}x{d}, {} foreground voxels", vol.foreground_count());
    Ok(())
}

fn synth(args: &SynthArgs, cfg: &RunConfig) -> Result<()> {
    if args.benchmark {
        let dir = args
            .out_dir
            .as_deref()
            .ok_or_else(|| Error::BadParameter("--benchmark needs --out-dir".into()))?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let specs = motion_benchmark(args.per_class, args.extent, args.jitter, cfg.seed);
        let mut counters = std::collections::BTreeMap::new();
        let names: Vec<PathBuf> = specs
            .iter()
            .map(|s| {
                let n = counters.entry(s.kind).or_insert(0usize);
                *n += 1;
                dir.join(format!("{}_{:02}.vol", s.kind, *n - 1))
            })
            .collect();
        par::map_slice(&specs, Execution::default(), generate)
            .into_iter()
            .zip(&names)
            .try_for_each(|(vol, path)| save_volume(&vol?, path))?;
        let entries: Vec<ManifestEntry> = specs
            .iter()
            .zip(names)
            .map(|(s, path)| ManifestEntry {
                path,
                label: s.kind.to_string(),
            })
            .collect();
        let manifest = dir.join("manifest.csv");
        write_manifest(&manifest, &entries)?;
        println!("{} volumes, manifest {}", entries.len(), manifest.display());
        return Ok(());
    }

    let kind: SynthKind = args
        .kind
        .as_deref()
        .ok_or_else(|| Error::BadParameter("--kind is required".into()))?
        .parse()?;
    let defaults = SynthParams::default();
    let params = SynthParams {
        speed: args.speed.unwrap_or(defaults.speed),
        amplitude: args.amplitude.unwrap_or(defaults.amplitude),
        radius: args.radius.unwrap_or(defaults.radius),
        period: args.period.unwrap_or(defaults.period),
        block: None,
    };
    let spec = SynthSpec::new(kind, args.extent)
        .with_params(params)
        .with_seed(cfg.seed)
        .with_jitter(args.jitter);
    let vol = generate(&spec)?;
    let output = args
        .output
        .as_deref()
        .ok_or_else(|| Error::BadParameter("--output is required".into()))?;
    save_volume(&vol, output)?;
    println!("{kind}: {} foreground voxels", vol.foreground_count());
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .or_else(|| path.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn signature(
    inputs: &[PathBuf],
    out_dir: Option<&Path>,
    format: Format,
    emit_curves: bool,
    cfg: &RunConfig,
) -> Result<()> {
    let params = cfg.signature_params();
    let to_stdout = out_dir.is_none() && inputs.len() == 1 && !emit_curves;
    let dir = out_dir.unwrap_or(Path::new("."));
    let mut stems = HashSet::new();
    for input in inputs {
        if !stems.insert(stem(input)) {
            return Err(Error::BadParameter(format!(
                "two inputs share the output name {:?}",
                stem(input)
            )));
        }
    }

    let results = par::map_slice(inputs, Execution::default(), |input| {
        let vol = load(input, cfg)?;
        let curves = curves_of_volume(&vol, params.r_max, Execution::Sequential)?;
        let sig = mfd_signature(&curves.loglog, &params, input.to_string_lossy())?;
        Ok((curves, sig))
    });
    for (input, r) in inputs.iter().zip(results) {
        let (curves, sig) = r?;
        if to_stdout {
            match format {
                Format::Json => stdout(&(sig.to_json() + "\n"))?,
                Format::Csv => stdout(&sig.to_csv())?,
                Format::Both => {
                    stdout(&(sig.to_json() + "\n"))?;
                    stdout(&sig.to_csv())?;
                }
            }
            continue;
        }
        let name = stem(input);
        let with = |suffix: &str| dir.join(format!("{name}{suffix}"));
        if matches!(format, Format::Json | Format::Both) {
            write_file(&with(".signature.json"), (sig.to_json() + "\n").as_bytes())?;
        }
        if matches!(format, Format::Csv | Format::Both) {
            write_file(&with(".signature.csv"), sig.to_csv().as_bytes())?;
        }
        if emit_curves {
            write_file(&with(".dilation.csv"), curves.dilation.to_csv().as_bytes())?;
            write_file(&with(".loglog.csv"), curves.loglog.to_csv().as_bytes())?;
        }
    }
    Ok(())
}

type Named = Vec<(String, VideoVolume)>;

/// Volumes of every manifest entry, plus labels, in manifest order.
fn load_manifest(path: &Path, cfg: &RunConfig) -> Result<(Named, Vec<String>)> {
    let entries = read_manifest(path)?;
    let vols = par::map_slice(&entries, Execution::default(), |e| {
        load_input(&e.path, cfg.binarize_threshold, Execution::Sequential)
            .map(|v| (e.path.to_string_lossy().into_owned(), v))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((vols, entries.into_iter().map(|e| e.label).collect()))
}

fn evaluate(
    vols: &[(String, VideoVolume)],
    labels: &[String],
    params: &SignatureParams,
    cache: &CurveCache,
    cfg: &RunConfig,
) -> Result<CvReport> {
    let sigs = signatures(vols, params, cache, Execution::default())?;
    let data = dataset_from_signatures(&sigs, labels)?;
    cross_validate(&data, cfg.folds, cfg.runs, cfg.svm_c, cfg.seed)
}

fn report_table(report: &CvReport) -> String {
    let mut s = String::new();
    let width = report
        .class_names
        .iter()
        .map(|n| n.len())
        .max()
        .unwrap_or(0)
        .max(5);
    s.push_str("run  accuracy\n");
    for (i, a) in report.run_accuracies.iter().enumerate() {
        s.push_str(&format!("{:>3}  {:>7.2} %\n", i + 1, 100.0 * a));
    }
    s.push_str(&format!(
        "\nconfusion (final run; rows true, columns predicted)\n{:width$}",
        ""
    ));
    for i in 0..report.class_names.len() {
        s.push_str(&format!(" {:>5}", i));
    }
    s.push('\n');
    for (i, row) in report.confusion.iter().enumerate() {
        s.push_str(&format!("{:width$}", report.class_names[i]));
        for v in row {
            s.push_str(&format!(" {v:>5}"));
        }
        s.push_str(&format!("   [{i}]\n"));
    }
    s.push('\n');
    s.push_str(&report.summary());
    s.push('\n');
    s
}

fn crossval(
    manifest: &Path,
    report_path: Option<&Path>,
    json: bool,
    cfg: &RunConfig,
) -> Result<()> {
    let (vols, labels) = load_manifest(manifest, cfg)?;
    let report = evaluate(
        &vols,
        &labels,
        &cfg.signature_params(),
        &CurveCache::new(),
        cfg,
    )?;
    let text = report.to_json() + "\n";
    if let Some(p) = report_path {
        write_file(p, text.as_bytes())?;
    }
    if json {
        stdout(&text)
    } else {
        stdout(&report_table(&report))
    }
}

fn train_cmd(manifest: &Path, output: &Path, cfg: &RunConfig) -> Result<()> {
    let (vols, labels) = load_manifest(manifest, cfg)?;
    let sigs = signatures(
        &vols,
        &cfg.signature_params(),
        &CurveCache::new(),
        Execution::default(),
    )?;
    let data = dataset_from_signatures(&sigs, &labels)?;
    let model = train(&data, cfg.svm_c)?;
    write_file(output, (model.to_json() + "\n").as_bytes())?;
    let correct = data
        .features()
        .iter()
        .zip(data.labels())
        .filter(|(f, &l)| model.predict(f).map(|p| p == l).unwrap_or(false))
        .count();
    println!(
        "{} classes, {} instances, training accuracy {:.2} %",
        data.class_names().len(),
        data.len(),
        100.0 * correct as f64 / data.len() as f64
    );
    Ok(())
}

fn predict(
    model_path: &Path,
    inputs: &[PathBuf],
    output: Option<&Path>,
    cfg: &RunConfig,
) -> Result<()> {
    let text = fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
    let model = SvmModel::from_json(&text)?;
    let params = cfg.signature_params();
    let labels = par::map_slice(inputs, Execution::default(), |input| {
        let vol = load(input, cfg)?;
        let curves = curves_of_volume(&vol, params.r_max, Execution::Sequential)?;
        let sig = mfd_signature(&curves.loglog, &params, input.to_string_lossy())?;
        model.predict_name(&sig.mfd).map(str::to_string)
    });
    let entries = inputs
        .iter()
        .zip(labels)
        .map(|(p, l)| {
            Ok(ManifestEntry {
                path: p.clone(),
                label: l?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match output {
        Some(p) => write_manifest(p, &entries),
        None => stdout(&format_manifest(&entries, Path::new(""))?),
    }
}

fn sweep(
    manifest: &Path,
    sigmas: &[f64],
    r_maxes: &[f64],
    output: Option<&Path>,
    cfg: &RunConfig,
) -> Result<()> {
    let (vols, labels) = load_manifest(manifest, cfg)?;
    let cache = CurveCache::new();
    let mut csv =
        String::from("sigma,r_max,mean_accuracy,std_accuracy,correct_count,total_count\n");
    let mut best: Option<(f64, f64, f64)> = None;
    for &r_max in r_maxes {
        let over = vols
            .iter()
            .filter(|(_, v)| {
                let (w, h, d) = v.dims();
                r_max * r_max > max_sqdist_bound(w, h, d) as f64
            })
            .count();
        if over > 0 {
            eprintln!(
                "warning: r_max {r_max} exceeds the diagonal of {over} volume(s); their curves truncate at saturation"
            );
        }
        for &sigma in sigmas {
            let params = SignatureParams {
                sigma,
                r_max,
                ..cfg.signature_params()
            };
            params.validate()?;
            let report = evaluate(&vols, &labels, &params, &cache, cfg)?;
            csv.push_str(&format!(
                "{sigma},{r_max},{},{},{},{}\n",
                report.mean_accuracy, report.std_accuracy, report.correct_count, report.total_count
            ));
            if best.is_none_or(|(_, _, acc)| report.mean_accuracy > acc) {
                best = Some((sigma, r_max, report.mean_accuracy));
            }
        }
    }
    match output {
        Some(p) => write_file(p, csv.as_bytes())?,
        None => stdout(&csv)?,
    }
    if let Some((sigma, r_max, acc)) = best {
        eprintln!("best: sigma={sigma} r_max={r_max} mean_accuracy={acc}");
    }
    Ok(())
}

fn edt_verify(input: &Path, dump: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let vol = load(input, cfg)?;
    let fast = squared_edt(&vol)?;
    let slow = brute_force_edt(&vol)?;
    let diff: Vec<usize> = fast
        .as_slice()
        .iter()
        .zip(slow.as_slice())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| i)
        .collect();
    if let Some(p) = dump {
        fast.save(p)?;
    }
    if let Some(&first) = diff.first() {
        return Err(Error::VerificationFailed {
            mismatches: diff.len(),
            first,
        });
    }
    let (w, h, d) = fast.dims();
    println!(
        "ok: {w}x{h}x{d} field matches brute force, max squared distance {}",
        fast.max()
    );
    Ok(())
}
