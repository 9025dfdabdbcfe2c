from .helpers import import_fresh, install_fake_modal


def test_build_image_ships_both_packages():
    install_fake_modal()
    module = import_fresh("modal_run.image")

    image = module.build_image()

    assert image.sources == ["khl", "modal_run"]
