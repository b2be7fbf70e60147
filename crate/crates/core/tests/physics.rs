use geomnet::numerics::Prng;
use geomnet::physics::{
    coulomb_velocities, euler_step, gen_charges, gen_gravity, gravity_field, pixel_center, render_field, squash,
    ChargeConfig, Dataset, GravityConfig, ParticleSet, ProblemConfig, SplitSizes,
};
use geomnet::Group;

fn transform(m: &[i32], p: [f64; 2], center: f64) -> [f64; 2] {
    let r = [p[0] - center, p[1] - center];
    [center + m[0] as f64 * r[0] + m[1] as f64 * r[1], center + m[2] as f64 * r[0] + m[3] as f64 * r[1]]
}

fn random_particles(rng: &mut Prng, count: usize, n: usize) -> ParticleSet {
    let positions = (0..count).map(|_| [rng.uniform(0.0, n as f64), rng.uniform(0.0, n as f64)]).collect();
    let weights = (0..count).map(|_| rng.uniform(0.1, 1.0)).collect();
    ParticleSet::new(positions, weights).unwrap()
}

#[test]
fn fields_rotate_with_their_sources() {
    let mut rng = Prng::new(5);
    for n in [5, 7] {
        let center = n as f64 / 2.0;
        for _ in 0..5 {
            let particles = random_particles(&mut rng, 4, n);
            let grav = gravity_field(&particles, n);
            let coul = render_field(&particles, n, Some(0.3)).unwrap();
            for g in Group::hyperoctahedral(2).elements() {
                let moved = ParticleSet::new(
                    particles.positions.iter().map(|&p| transform(g.matrix(), p, center)).collect(),
                    particles.weights.clone(),
                )
                .unwrap();
                let expect = grav.act(g).unwrap();
                assert!(gravity_field(&moved, n).max_abs_diff(&expect).unwrap() <= 1e-9 * expect.max_abs());
                let expect = coul.act(g).unwrap();
                assert!(render_field(&moved, n, Some(0.3)).unwrap().max_abs_diff(&expect).unwrap() <= 1e-12);
            }
        }
    }
}

#[test]
fn like_charges_separate_every_step() {
    let mut particles = ParticleSet::new(vec![[7.0, 8.0], [9.0, 8.5]], vec![1.0, 1.0]).unwrap();
    let dist = |p: &ParticleSet| {
        let (a, b) = (p.positions[0], p.positions[1]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    };
    let mut last = dist(&particles);
    for _ in 0..10 {
        euler_step(&mut particles, 0.01);
        let now = dist(&particles);
        assert!(now > last);
        last = now;
    }
}

#[test]
fn velocities_follow_the_inverse_square_law() {
    let particles = ParticleSet::new(vec![[2.0, 2.0], [4.0, 2.0]], vec![1.0, 3.0]).unwrap();
    let v = coulomb_velocities(&particles);
    assert!((v[0][0] + 0.75).abs() < 1e-12 && (v[1][0] - 0.25).abs() < 1e-12);
    assert_eq!((v[0][1], v[1][1]), (0.0, 0.0));
}

#[test]
fn single_charge_field_is_radial() {
    let n = 9;
    let source = [3.3, 5.1];
    let particles = ParticleSet::new(vec![source], vec![2.0]).unwrap();
    let field = render_field(&particles, n, None).unwrap();
    for i in 0..n {
        for j in 0..n {
            let p = pixel_center(i, j);
            let r = [p[0] - source[0], p[1] - source[1]];
            let f = field.pixel(&[i, j]);
            let f = f.components();
            // Points away from a positive charge with magnitude q / r^2.
            assert!((f[0] * r[1] - f[1] * r[0]).abs() <= 1e-12);
            assert!(f[0] * r[0] + f[1] * r[1] > 0.0);
            let r2 = r[0] * r[0] + r[1] * r[1];
            assert!((f[0].hypot(f[1]) - 2.0 / r2).abs() <= 1e-12 * (2.0 / r2));
        }
    }
}

#[test]
fn equal_masses_cancel_on_the_bisector() {
    let n = 5;
    let particles = ParticleSet::new(vec![pixel_center(1, 2), pixel_center(3, 2)], vec![0.7, 0.7]).unwrap();
    let field = gravity_field(&particles, n);
    for j in 0..n {
        let f = field.pixel(&[2, j]);
        assert!(f.components()[0].abs() <= 1e-15);
    }
    // Off the bisector the pull leans towards the nearer mass.
    assert!(field.pixel(&[0, 0]).components()[0] > 0.0);
}

#[test]
fn squash_is_bounded_and_monotone() {
    let mut last = 0.0;
    for k in 1..50 {
        let v = squash([k as f64 * 0.1, 0.0], 0.2);
        assert!(v[0] > last && v[0] < 0.5);
        last = v[0];
    }
    assert_eq!(squash([0.0, 0.0], 0.2), [0.0, 0.0]);
}

#[test]
fn generation_is_deterministic_and_prefix_stable() {
    let g = GravityConfig::default();
    assert_eq!(gen_gravity(3, 4, &g).unwrap(), gen_gravity(3, 4, &g).unwrap());
    assert_eq!(gen_gravity(3, 2, &g).unwrap()[..], gen_gravity(3, 4, &g).unwrap()[..2]);
    assert_ne!(gen_gravity(3, 1, &g).unwrap(), gen_gravity(4, 1, &g).unwrap());
    let c = ChargeConfig::default();
    let a = gen_charges(1, 3, &c).unwrap();
    assert_eq!(a, gen_charges(1, 3, &c).unwrap());
    for s in &a {
        assert!(s.input.max_abs() < 0.5 && s.target.max_abs() < 0.5);
        assert!(s.input.max_abs_diff(&s.target).unwrap() > 0.0);
    }

    let config = ProblemConfig::default_for(geomnet::physics::Problem::Gravity);
    let small = Dataset::generate(config.clone(), 9, SplitSizes { train: 2, val: 2, test: 2 }).unwrap();
    let large = Dataset::generate(config, 9, SplitSizes { train: 5, val: 2, test: 2 }).unwrap();
    assert_eq!(small.train[..], large.train[..2]);
    assert_eq!(small.val, large.val);
    assert_eq!(small.test, large.test);
    assert_ne!(small.val[0], small.test[0]);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(gen_gravity(0, 1, &GravityConfig { n: 2, masses: 5 }).is_err());
    assert!(gen_charges(0, 1, &ChargeConfig { dt: 0.0, ..Default::default() }).is_err());
    assert!(ParticleSet::new(vec![[0.0, 0.0]], vec![]).is_err());
    assert!(ParticleSet::new(vec![[0.0, 0.0]], vec![-1.0]).is_err());
    assert!(render_field(&ParticleSet::new(vec![], vec![]).unwrap(), 4, Some(-1.0)).is_err());
}
