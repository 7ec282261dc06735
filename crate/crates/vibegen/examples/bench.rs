use std::time::Instant;
use vibegen::model::*;
use vibegen::rng::Rng;
use vibegen::tensor::{Mode, Tensor};
use vibegen::tensor::conv::*;
use vibegen::tensor::ConvSpec;
use vibegen::tensor::ConvParams;

fn main() {
    let mut rng = Rng::from_seed(1);
    let model = GanModel::<f32>::reference(1);
    let batch = 64;

    let mut m = model.clone();
    let z: Tensor<f32> = sample_latent(batch, 256, 1, &mut rng);
    let t0 = Instant::now();
    let fake = generator_forward(&mut m, &z, Mode::Train).unwrap();
    println!("gen fwd      {:?}", t0.elapsed());

    let t0 = Instant::now();
    let (_, caches) = critic_forward_cached(&m, &fake, Mode::Train, 0.3, &mut rng, true).unwrap();
    println!("critic fwd   {:?}", t0.elapsed());

    let t0 = Instant::now();
    let grad = Tensor::from_vec(batch, 1, 1, vec![1.0f32/batch as f32; batch]).unwrap();
    let mut m2 = m.clone();
    let _gi = critic_backward(&mut m2, &caches, &grad).unwrap();
    println!("critic bwd   {:?}", t0.elapsed());

    let t0 = Instant::now();
    let (out, gcaches) = generator_forward_cached(&mut m2, &z, Mode::Train, true).unwrap();
    println!("gen fwd+cach {:?}", t0.elapsed());
    let t0 = Instant::now();
    let go = Tensor::zeros(batch, 1, out.length);
    generator_backward(&mut m2, &gcaches, &go).unwrap();
    println!("gen bwd      {:?}", t0.elapsed());

    let sp = ConvSpec { in_channels: 64, out_channels: 128, kernel: 4, stride: 2, padding: 1, transposed: false };
    let params = ConvParams::<f32>::init(&sp, &mut rng);
    let x_data: Vec<f32> = (0..batch*64*128).map(|i| (i as f32 * 0.001).sin()).collect();
    let x = Tensor::from_vec(batch, 64, 128, x_data).unwrap();
    let t0 = Instant::now();
    let y = conv1d_forward(&x, &sp, &params).unwrap();
    let dt = t0.elapsed();
    let macs = (batch * 128 * 64 * 64 * 4) as f64;
    println!("critic L4 fwd {:?}  ({:.2} GMAC/s)", dt, macs / dt.as_secs_f64() / 1e9);

    let mut p2 = params.clone();
    let t0 = Instant::now();
    let _ = conv1d_backward(&x, &y, &sp, &mut p2).unwrap();
    let dt = t0.elapsed();
    println!("critic L4 bwd {:?}  ({:.2} GMAC/s)", dt, 2.0 * macs / dt.as_secs_f64() / 1e9);

    let sp = ConvSpec { in_channels: 256, out_channels: 128, kernel: 64, stride: 2, padding: 0, transposed: true };
    let params = ConvParams::<f32>::init(&sp, &mut rng);
    let z_data: Vec<f32> = (0..batch*256).map(|i| (i as f32 * 0.01).cos()).collect();
    let zz = Tensor::from_vec(batch, 256, 1, z_data).unwrap();
    let t0 = Instant::now();
    let y = conv_transpose1d_forward(&zz, &sp, &params).unwrap();
    let dt = t0.elapsed();
    let macs = (batch * 256 * 128 * 64) as f64;
    println!("gen L1 fwd    {:?}  ({:.2} GMAC/s)", dt, macs / dt.as_secs_f64() / 1e9);

    let mut p2 = params.clone();
    let t0 = Instant::now();
    let _ = conv_transpose1d_backward(&zz, &y, &sp, &mut p2).unwrap();
    let dt = t0.elapsed();
    println!("gen L1 bwd    {:?}  ({:.2} GMAC/s)", dt, 2.0 * macs / dt.as_secs_f64() / 1e9);

    let sp = ConvSpec { in_channels: 128, out_channels: 64, kernel: 4, stride: 2, padding: 1, transposed: true };
    let params = ConvParams::<f32>::init(&sp, &mut rng);
    let x_data: Vec<f32> = (0..batch*128*64).map(|i| (i as f32 * 0.001).sin()).collect();
    let x = Tensor::from_vec(batch, 128, 64, x_data).unwrap();
    let t0 = Instant::now();
    let y = conv_transpose1d_forward(&x, &sp, &params).unwrap();
    let dt = t0.elapsed();
    let macs = (batch * 128 * 64 * 64 * 4) as f64;
    println!("gen L2 fwd    {:?}  ({:.2} GMAC/s)", dt, macs / dt.as_secs_f64() / 1e9);

    let mut p2 = params.clone();
    let t0 = Instant::now();
    let _ = conv_transpose1d_backward(&x, &y, &sp, &mut p2).unwrap();
    let dt = t0.elapsed();
    println!("gen L2 bwd    {:?}  ({:.2} GMAC/s)", dt, 2.0 * macs / dt.as_secs_f64() / 1e9);
}
