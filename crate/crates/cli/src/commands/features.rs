use std::path::{Path, PathBuf};

use impnet::features::{read_wav, FrontEnd};
use impnet::io::{archive_csv, write_archive, write_atomic};
use impnet::Error;

use crate::error::CliResult;

fn wav_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run(wav_dir: &Path, out: &Path, sample_rate: u32, mel_bands: usize, mean_norm: bool) -> CliResult {
    let files = wav_files(wav_dir)?;
    if files.is_empty() {
        return Err(Error::Audio(format!("no .wav files in {}", wav_dir.display())).into());
    }
    let front = FrontEnd { mel_bands, mean_norm };
    let mut entries = Vec::with_capacity(files.len());
    for path in &files {
        let audio = read_wav(path)?;
        if audio.sample_rate() != sample_rate {
            return Err(Error::Audio(format!(
                "{}: sample rate {} Hz, expected {sample_rate} Hz",
                path.display(),
                audio.sample_rate()
            ))
            .into());
        }
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        entries.push((id, front.extract(&audio)?));
    }
    write_archive(out, &entries)?;
    write_atomic(out.with_extension("csv"), archive_csv(&entries).as_bytes())?;
    let frames: usize = entries.iter().map(|(_, m)| m.frames()).sum();
    println!("{} utterances, {frames} frames, {mel_bands} bands -> {}", entries.len(), out.display());
    Ok(())
}
