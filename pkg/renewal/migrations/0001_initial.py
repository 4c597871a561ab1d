# Generated by Django 5.1.1 on 2026-10-19 12:00

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Run',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=50)),
                ('seed', models.BigIntegerField(default=0)),
                ('config', models.JSONField(default=dict)),
                ('status', models.CharField(choices=[('running', 'Выполняется'), ('ok', 'Успешно'), ('failed', 'Ошибка')], default='running', max_length=16)),
                ('exit_code', models.PositiveSmallIntegerField(blank=True, null=True)),
                ('output_dir', models.CharField(max_length=500)),
                ('manifest', models.JSONField(blank=True, default=dict)),
                ('started', models.DateTimeField(auto_now_add=True)),
                ('finished', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ('-started',),
                'verbose_name': 'Прогон',
                'verbose_name_plural': 'Прогоны',
            },
        ),
        migrations.CreateModel(
            name='Artifact',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(max_length=20)),
                ('path', models.CharField(max_length=500)),
                ('columns', models.JSONField(blank=True, default=list)),
                ('created', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='artifacts', to='renewal.run')),
            ],
            options={
                'ordering': ('created',),
            },
        ),
    ]
